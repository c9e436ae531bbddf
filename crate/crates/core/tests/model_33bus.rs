//! Model-structure and small-horizon solve checks on the bundled 33-bus
//! dataset.

use hygrid_core::dataset;
use hygrid_core::network::to_per_unit;
use hygrid_core::powerflow::LinearizationPoint;
use hygrid_core::scheduler::{build_model, BuildOptions, VarKind};
use hygrid_core::scenario::{run_scenario, RunOptions};
use hygrid_core::solver::SolverOptions;

/// Variable and row counts follow directly from the dataset dimensions:
/// 30 closed lines (21 AC), 33 buses (22 AC), 3 dispatchable units on AC
/// buses, 1 nondispatchable, 1 storage, 2 converters, 2 connection points
/// (1 AC). Everything scales linearly in T.
#[test]
fn dimension_counts_match_dataset_arithmetic() {
    let net = dataset::ieee33();
    let profiles = dataset::ieee33_profiles();
    let norm = to_per_unit(&net).unwrap();
    let t = profiles.horizon;
    assert_eq!(t, 24);

    let point = LinearizationPoint::flat(norm.buses.len(), t);
    let model = build_model(&norm, &profiles, &point, &BuildOptions::default()).unwrap();

    let closed = 30;
    let closed_ac = 21;
    let expected_vars = 2 * closed * t      // PL both directions
        + 2 * closed_ac * t                 // QL both directions
        + 33 * t                            // dV
        + 22 * t                            // dTheta on AC buses
        + 3 * t * 5                         // dispatchable P, Q, I, Y, Z
        + t                                 // PV output
        + 6 * t                             // storage PB, PCH, PDCH, E, U, V
        + 2 * t * 4                         // converter PCR, PCI, D, QC
        + 2 * t                             // PM at both connection points
        + t; // QM at the AC connection point
    assert_eq!(model.num_vars(), expected_vars);
    assert_eq!(model.num_vars(), 4560);

    let expected_rows = 2 * closed * t + 2 * closed_ac * t // flow definitions
        + 2 * 2 * t                                        // converter gates
        + 33 * t + 22 * t                                  // nodal balances
        + 3 * t * 14                                       // unit commitment
        + 5 * t; // storage
    assert_eq!(model.num_rows(), expected_rows);
    assert_eq!(model.num_rows(), 4992);

    let binaries = model.binary_vars();
    assert_eq!(binaries.len(), 3 * t + 2 * t + 2 * t);
    for v in &binaries {
        let def = &model.vars()[v.index()];
        assert_eq!(def.kind, VarKind::Binary);
        assert!(def.lb >= 0.0 && def.ub <= 1.0);
    }
}

/// Every nomenclature variable family maps to exactly one registered family
/// in the index.
#[test]
fn variable_families_cover_nomenclature() {
    let net = dataset::ieee33();
    let profiles = dataset::ieee33_profiles();
    let norm = to_per_unit(&net).unwrap();
    let point = LinearizationPoint::flat(norm.buses.len(), profiles.horizon);
    let model = build_model(&norm, &profiles, &point, &BuildOptions::default()).unwrap();
    let idx = &model.index;

    assert_eq!(idx.gen_p.len(), 4); // P
    assert_eq!(idx.gen_q.iter().filter(|q| q.is_some()).count(), 3); // Q
    assert_eq!(idx.gen_i.iter().filter(|i| i.is_some()).count(), 3); // I
    assert_eq!(idx.gen_y.iter().filter(|y| y.is_some()).count(), 3); // y
    assert_eq!(idx.gen_z.iter().filter(|z| z.is_some()).count(), 3); // z
    assert_eq!(idx.sto_pb.len(), 1); // P^B
    assert_eq!(idx.sto_ch.len(), 1); // p^ch
    assert_eq!(idx.sto_dch.len(), 1); // p^dch
    assert_eq!(idx.sto_e.len(), 1); // E
    assert_eq!(idx.sto_u.len(), 1); // u
    assert_eq!(idx.sto_v.len(), 1); // v
    assert_eq!(idx.conv_rect.len(), 2); // PC (rectifying)
    assert_eq!(idx.conv_inv.len(), 2); // PC (inverting)
    assert_eq!(idx.conv_qc.len(), 2); // QC
    assert_eq!(idx.pl.iter().filter(|p| p.is_some()).count(), 30); // PL
    assert_eq!(idx.ql.iter().filter(|q| q.is_some()).count(), 21); // QL
    assert_eq!(idx.dv.len(), 33); // V deviations
    assert_eq!(idx.dth.iter().filter(|d| d.is_some()).count(), 22); // theta
    assert_eq!(idx.pm.len(), 2); // P^M split AC/DC
    assert_eq!(idx.qm.len(), 1); // Q^M at the AC pcc

    // Variable names encode entity and hour for the LP export.
    assert!(model.vars().iter().any(|v| v.name == "P_G1_t07"));
    assert!(model.vars().iter().any(|v| v.name == "PL_L1_f_t00"));
}

/// Two-hour end-to-end run on the full network: solves, converges, and
/// passes independent verification.
#[test]
fn two_hour_33bus_run_verifies() {
    let net = dataset::ieee33();
    let mut profiles = dataset::ieee33_profiles();
    // Truncate the bundled series to two hours.
    profiles.horizon = 2;
    profiles.price.truncate(2);
    for series in profiles.pd.values_mut() {
        series.truncate(2);
    }
    for series in profiles.qd.values_mut() {
        series.truncate(2);
    }
    for series in profiles.availability.values_mut() {
        series.truncate(2);
    }

    let mut opts = RunOptions::default();
    opts.solver = SolverOptions::with_gap(1e-4);
    let report = run_scenario(&net, &profiles, &opts).expect("run succeeds");
    assert!(report.converged, "trace: {:?}", report.trace.records.len());
    assert!(report.verifier.pass(), "{}", report.verifier.to_text());
    assert!(report.objective_usd > 0.0);
    assert!(report.losses_kw >= 0.0);
    assert!(report.oracle.max_v_error <= 0.01, "{}", report.oracle.max_v_error);
}
