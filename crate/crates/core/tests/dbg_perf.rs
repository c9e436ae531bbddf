use hygrid_core::dataset;
use hygrid_core::network::to_per_unit;
use hygrid_core::powerflow::LinearizationPoint;
use hygrid_core::scheduler::{build_model, BuildOptions};
use hygrid_core::solver::{solve_milp, MilpInstance, SolverOptions};
use std::time::Instant;

#[test]
fn dbg_perf_pieces() {
    let net = dataset::ieee33();
    let profiles = dataset::ieee33_profiles();
    let norm = to_per_unit(&net).unwrap();
    let t0 = Instant::now();
    let point = LinearizationPoint::flat(norm.buses.len(), profiles.horizon);
    let model = build_model(&norm, &profiles, &point, &BuildOptions::default()).unwrap();
    println!("build: {:.3}s  vars {} rows {}", t0.elapsed().as_secs_f64(), model.num_vars(), model.num_rows());

    let t0 = Instant::now();
    let instance = MilpInstance::from_model(&model);
    println!("lower: {:.3}s", t0.elapsed().as_secs_f64());

    // Root relaxation timing via a fully-relaxed MILP (no binaries declared).
    let mut relaxed = instance.clone();
    relaxed.binaries.clear();
    relaxed.priorities.clear();
    let t0 = Instant::now();
    let out = solve_milp(&relaxed, &SolverOptions::default()).unwrap();
    println!("root LP: {:.3}s obj {:.4}", t0.elapsed().as_secs_f64(), out.objective);

    let t0 = Instant::now();
    let out = solve_milp(&instance, &SolverOptions::with_gap(1e-4)).unwrap();
    println!("milp: {:.3}s obj {:.4} nodes {}", t0.elapsed().as_secs_f64(), out.objective, out.node_count);
}
