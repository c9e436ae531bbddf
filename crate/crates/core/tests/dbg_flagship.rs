use hygrid_core::dataset;
use hygrid_core::scenario::{run_scenario, RunOptions};
use hygrid_core::solver::SolverOptions;
use std::time::Instant;

#[test]
fn dbg_flagship() {
    let net = dataset::ieee33();
    let profiles = dataset::ieee33_profiles();
    let mut opts = RunOptions::default();
    opts.solver = SolverOptions::with_gap(1e-4);
    let start = Instant::now();
    match run_scenario(&net, &profiles, &opts) {
        Ok(r) => {
            println!("elapsed {:.1}s obj {:.3} losses {:.1} iters {} converged {} guard {}",
                start.elapsed().as_secs_f64(), r.objective_usd, r.losses_kw,
                r.iterations, r.converged, r.trace.guard_engaged);
            println!("verify max resid {:.2e}; oracle v_err {:.2e} flow_frac {:.2e} flow_pu {:.2e}",
                r.verifier.max_residual, r.oracle.max_v_error, r.oracle.max_flow_error_frac, r.oracle.max_flow_error_pu);
            for rec in &r.trace.records {
                println!("  iter {} obj {:.4} maxdv {:.3e}", rec.iteration, rec.objective, rec.max_dv_change);
            }
        }
        Err(e) => println!("err after {:.1}s: {e}", start.elapsed().as_secs_f64()),
    }
}

#[test]
fn dbg_flow_rows() {
    let net = dataset::ieee33();
    let profiles = dataset::ieee33_profiles();
    let mut opts = RunOptions::default();
    opts.solver = SolverOptions::with_gap(1e-4);
    let r = run_scenario(&net, &profiles, &opts).unwrap();
    let mut rows = r.oracle.line_rows.clone();
    rows.sort_by(|a, b| {
        let ea = (a.pl_linear - a.pl_exact).abs() / a.pl_exact.abs().max(1e-3);
        let eb = (b.pl_linear - b.pl_exact).abs() / b.pl_exact.abs().max(1e-3);
        eb.total_cmp(&ea)
    });
    for row in rows.iter().take(12) {
        println!("line {} t{} linear {:.5} exact {:.5} abs {:.2e}",
            row.line, row.hour, row.pl_linear, row.pl_exact,
            (row.pl_linear - row.pl_exact).abs());
    }
}
