use hygrid_core::dataset;
use hygrid_core::profiles::ProfileSet;
use hygrid_core::scenario::{run_scenario, RunOptions};
use hygrid_core::solver::SolverOptions;
use std::collections::BTreeMap;

fn nominal_snapshot() -> ProfileSet {
    let p = dataset::ieee33_profiles();
    ProfileSet {
        horizon: 1,
        pd: p.pd.iter().map(|(k, _)| {
            let nominal = p.pd[k].iter().cloned().fold(0.0f64, f64::max);
            (k.clone(), vec![nominal])
        }).collect::<BTreeMap<_,_>>(),
        qd: p.qd.iter().map(|(k, _)| {
            let nominal = p.qd[k].iter().cloned().fold(0.0f64, f64::max);
            (k.clone(), vec![nominal])
        }).collect::<BTreeMap<_,_>>(),
        price: vec![0.05],
        availability: BTreeMap::from([("G4".to_string(), vec![1.0])]),
        pm_max: p.pm_max,
        label: Some("nominal-snapshot".into()),
    }
}

#[test]
fn dbg_snapshot() {
    let net = dataset::ieee33();
    let profiles = nominal_snapshot();
    let mut opts = RunOptions::default();
    opts.solver = SolverOptions::with_gap(1e-4);
    let r = run_scenario(&net, &profiles, &opts).unwrap();
    println!("converged {} iters {} obj {:.3}", r.converged, r.iterations, r.objective_usd);
    println!("v_err {:.3e} flow_frac {:.3e} flow_pu {:.3e}", r.oracle.max_v_error, r.oracle.max_flow_error_frac, r.oracle.max_flow_error_pu);
    let mut rows = r.oracle.line_rows.clone();
    rows.sort_by(|a, b| (b.pl_linear - b.pl_exact).abs().total_cmp(&(a.pl_linear - a.pl_exact).abs()));
    for row in rows.iter().take(6) {
        println!("  line {} linear {:.5} exact {:.5}", row.line, row.pl_linear, row.pl_exact);
    }
}
