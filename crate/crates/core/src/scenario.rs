//! Case-study transforms, the end-to-end run pipeline, and report emission.
//!
//! A run loads a network and profiles, applies the configured transform
//! (splitting or coupling the AC and DC sides, or relocating loads/DERs
//! across them), normalizes to per-unit, drives the successive
//! linearization loop around build-model/solve/extract, certifies the final
//! solution with the independent verifier, measures linearization error
//! against the exact oracle, and emits CSV/JSON reports. Verification
//! failure fails the run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acpf::{linearization_error, LinearizationErrorReport};
use crate::network::{parse_network, to_per_unit, BusKind, Network};
use crate::powerflow::{
    successive_linearization, IterationTrace, Iterate, LinearizationPoint, SuccessiveError,
};
use crate::profiles::{parse_profiles, ProfileSet};
use crate::scheduler::{
    build_model, extract_solution, BuildOptions, SolveStatus, Solution,
};
use crate::solver::{
    solve_fixed_lp, Basis, BranchBoundBackend, MilpInstance, SolveBackend, SolverOptions,
};
use crate::verifier::{check_solution_with, VerifyOptions, ViolationReport};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("load: {0}")]
    Load(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error("transform: {0}")]
    Transform(String),
    #[error("normalize: {0}")]
    Normalize(String),
    #[error("solve: {0}")]
    Solve(String),
    #[error("solve: model infeasible")]
    Infeasible,
    #[error("linearization did not converge within {0} iterations")]
    NonConverged(usize),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("oracle: {0}")]
    Oracle(String),
    #[error("emit: {0}")]
    Emit(String),
}

// ---------------------------------------------------------------------------
// Configuration and transforms
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTransform {
    /// Use the dataset as stored.
    #[default]
    None,
    /// Split the AC and DC sides: converter ratings zeroed, normally-open
    /// ties closed so each side stays internally connected.
    Disconnect,
    /// Couple the sides through the converters at rated capacity with the
    /// ties back open (the as-stored coupling for the bundled dataset).
    Interconnect,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LoadRelocation {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DerRelocation {
    pub unit: String,
    pub bus: String,
}

fn default_tol() -> f64 {
    1e-4
}
fn default_max_iter() -> usize {
    20
}
fn default_gap() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub network: PathBuf,
    pub profiles: PathBuf,
    #[serde(default)]
    pub case: CaseTransform,
    #[serde(default)]
    pub relocate_loads: Vec<LoadRelocation>,
    #[serde(default)]
    pub relocate_ders: Vec<DerRelocation>,
    /// Successive-linearization voltage tolerance (per-unit).
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Relative MIP gap.
    #[serde(default = "default_gap")]
    pub gap: f64,
    #[serde(default)]
    pub node_limit: Option<usize>,
    /// Reactive exchange bound (kVAr); defaults to the tie capacity.
    #[serde(default)]
    pub qm_max: Option<f64>,
    #[serde(default)]
    pub require_terminal_energy: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn new(network: impl Into<PathBuf>, profiles: impl Into<PathBuf>) -> ScenarioConfig {
        ScenarioConfig {
            network: network.into(),
            profiles: profiles.into(),
            case: CaseTransform::None,
            relocate_loads: Vec::new(),
            relocate_ders: Vec::new(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            gap: default_gap(),
            node_limit: None,
            qm_max: None,
            require_terminal_energy: false,
            out: None,
        }
    }

    pub fn run_options(&self) -> RunOptions {
        let mut solver = SolverOptions::with_gap(self.gap);
        if let Some(n) = self.node_limit {
            solver.node_limit = n;
        }
        RunOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            solver,
            build: BuildOptions {
                qm_max: self.qm_max,
                require_terminal_energy: self.require_terminal_energy,
                trust_radius: None,
            },
            verify_tol: 1e-6,
        }
    }
}

/// Applies the case transform and any relocations, returning fresh copies.
pub fn apply_case_transform(
    net: &Network,
    profiles: &ProfileSet,
    case: CaseTransform,
    relocate_loads: &[LoadRelocation],
    relocate_ders: &[DerRelocation],
) -> Result<(Network, ProfileSet), ScenarioError> {
    let mut net = net.clone();
    let mut profiles = profiles.clone();

    match case {
        CaseTransform::None => {}
        CaseTransform::Disconnect => {
            for conv in &mut net.converters {
                conv.pc_max = 0.0;
                conv.qc_max = 0.0;
            }
            for line in &mut net.lines {
                line.open = false;
            }
        }
        CaseTransform::Interconnect => {
            // Converters keep their stored ratings; ties stay as flagged in
            // the dataset (normally open).
        }
    }

    for r in relocate_loads {
        let from = net
            .bus(&r.from)
            .ok_or_else(|| ScenarioError::Transform(format!("unknown bus `{}`", r.from)))?
            .clone();
        let to = net
            .bus(&r.to)
            .ok_or_else(|| ScenarioError::Transform(format!("unknown bus `{}`", r.to)))?
            .clone();
        let _ = from;
        if let Some(series) = profiles.pd.remove(&r.from) {
            let entry = profiles.pd.entry(r.to.clone()).or_insert_with(|| vec![0.0; series.len()]);
            for (acc, v) in entry.iter_mut().zip(&series) {
                *acc += v;
            }
        }
        if let Some(series) = profiles.qd.remove(&r.from) {
            if to.kind == BusKind::DC {
                log::warn!(
                    "reactive load of bus {} dropped: target bus {} is DC",
                    r.from,
                    r.to
                );
            } else {
                let entry =
                    profiles.qd.entry(r.to.clone()).or_insert_with(|| vec![0.0; series.len()]);
                for (acc, v) in entry.iter_mut().zip(&series) {
                    *acc += v;
                }
            }
        }
    }

    for r in relocate_ders {
        let bus = net
            .bus(&r.bus)
            .ok_or_else(|| ScenarioError::Transform(format!("unknown bus `{}`", r.bus)))?
            .clone();
        let _ = bus;
        let mut moved = false;
        for gen in &mut net.generators {
            if gen.id == r.unit {
                gen.bus = r.bus.clone();
                moved = true;
            }
        }
        for sto in &mut net.storages {
            if sto.id == r.unit {
                sto.bus = r.bus.clone();
                moved = true;
            }
        }
        if !moved {
            return Err(ScenarioError::Transform(format!("unknown unit `{}`", r.unit)));
        }
    }

    net.validate()
        .map_err(|e| ScenarioError::Transform(e.to_string()))?;
    profiles
        .validate_against(&net)
        .map_err(|e| ScenarioError::Transform(e.to_string()))?;
    Ok((net, profiles))
}

// ---------------------------------------------------------------------------
// Run pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub solver: SolverOptions,
    pub build: BuildOptions,
    pub verify_tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            tol: default_tol(),
            max_iter: default_max_iter(),
            solver: SolverOptions::default(),
            build: BuildOptions::default(),
            verify_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub objective_usd: f64,
    pub losses_kw: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub converged: bool,
    pub trace: IterationTrace,
    pub verifier: ViolationReport,
    pub oracle: LinearizationErrorReport,
    pub solution: Solution,
    /// The transformed network and profiles the run actually solved.
    pub network: Network,
    pub profiles: ProfileSet,
}

/// End-to-end run from parsed inputs using the bundled solver backend.
pub fn run_scenario(
    net: &Network,
    profiles: &ProfileSet,
    opts: &RunOptions,
) -> Result<RunReport, ScenarioError> {
    run_scenario_with(net, profiles, opts, &BranchBoundBackend)
}

pub fn run_scenario_with(
    net: &Network,
    profiles: &ProfileSet,
    opts: &RunOptions,
    backend: &dyn SolveBackend,
) -> Result<RunReport, ScenarioError> {
    let norm = to_per_unit(net).map_err(|e| ScenarioError::Normalize(e.to_string()))?;
    let horizon = profiles.horizon;

    // The MILP picks the pattern; a pattern-pinned LP warm-started from the
    // previous iteration's basis then picks the vertex. The trust radius
    // shrinks geometrically while the pattern holds still (and re-opens when
    // it moves): the frozen loss factor otherwise lets a solve harvest
    // fictitious negative losses by swinging voltages against the point
    // along degenerate reactive directions, which locks a two-cycle.
    const TRUST_START: f64 = 0.04;
    const TRUST_SHRINK: f64 = 0.5;
    let trust_floor = opts.tol / 4.0;
    let mut last_pattern: Option<Vec<bool>> = None;
    let mut last_basis: Option<Basis> = None;
    let mut iter_count = 0usize;
    let outcome = successive_linearization(
        norm.buses.len(),
        horizon,
        opts.tol,
        opts.max_iter,
        |point: &LinearizationPoint, fixed: Option<&[bool]>| {
            // The radius halves every iteration: the frozen loss factor is a
            // linear channel a solve can game, and squeezing the feasible
            // neighborhood around the point is what forces the loop to
            // commit. When the restricted solve is infeasible, retry first
            // without the commitment pins (the frozen schedule can go stale
            // as losses sharpen near a congested hour), then with the full
            // voltage range; only then is the model genuinely infeasible.
            let base_radius = (iter_count > 0).then(|| {
                (TRUST_START * TRUST_SHRINK.powi(iter_count as i32 - 1)).max(trust_floor)
            });
            iter_count += 1;
            let mut attempts: Vec<(Option<f64>, bool)> = vec![(base_radius, fixed.is_some())];
            if fixed.is_some() {
                attempts.push((base_radius, false));
            }
            if base_radius.is_some() {
                attempts.push((None, false));
            }
            let mut attempts = attempts.into_iter();
            loop {
                let Some((radius, use_pins)) = attempts.next() else {
                    return Err(ScenarioError::Infeasible);
                };
                let mut build = opts.build.clone();
                build.trust_radius = radius;
                let model = build_model(&norm, profiles, point, &build)
                    .map_err(|e| ScenarioError::Solve(e.to_string()))?;
                let instance = MilpInstance::from_model(&model);
                let solved = (|| -> Result<_, ScenarioError> {
                    let mut solver_opts = opts.solver.clone();
                    if let Some(prev) = &last_basis {
                        solver_opts.warm_basis = Some(prev.clone());
                    }
                    match fixed {
                        // The guard pins the commitment pattern only;
                        // storage states and converter directions stay free
                        // so the frozen schedule remains feasible while the
                        // loss coefficients keep drifting.
                        Some(p) if use_pins => {
                            solver_opts.pinned_binaries = Some(commitment_pins(&model, p));
                        }
                        _ => {
                            if let Some(prev) = &last_pattern {
                                solver_opts.incumbent_seed = Some(prev.clone());
                            }
                        }
                    }
                    let out = backend
                        .solve(&model, &solver_opts)
                        .map_err(|e| ScenarioError::Solve(e.to_string()))?;
                    if out.status == crate::solver::OutcomeStatus::Infeasible {
                        return Err(ScenarioError::Infeasible);
                    }
                    let pattern = model.binary_pattern(&out.values);
                    let (out, basis) =
                        solve_fixed_lp(&instance, &pattern, &opts.solver, last_basis.as_ref())
                            .map_err(|e| ScenarioError::Solve(e.to_string()))?;
                    if out.status == crate::solver::OutcomeStatus::Infeasible {
                        return Err(ScenarioError::Infeasible);
                    }
                    Ok((pattern, out, basis))
                })();
                match solved {
                    Err(ScenarioError::Infeasible) => continue,
                    Err(e) => return Err(e),
                    Ok((pattern, out, basis)) => {
                        last_basis = Some(basis);
                        last_pattern = Some(pattern.clone());
                        let solution = extract_solution(
                            &model,
                            &norm,
                            profiles,
                            point,
                            &out,
                            opts.solver.int_tol,
                        )
                        .map_err(|e| ScenarioError::Solve(e.to_string()))?;
                        return Ok(Iterate {
                            dv: solution.bus_dv.clone(),
                            objective: solution.objective_usd,
                            binaries: pattern,
                            solution,
                        });
                    }
                }
            }
        },
    )
    .map_err(|e| match e {
        SuccessiveError::Factory(err) => err,
        other => ScenarioError::Solve(other.to_string()),
    })?;

    let mut solution = outcome.solution;
    let trace = outcome.trace;
    if !trace.converged {
        solution.status = SolveStatus::FeasibleNonconverged;
    }

    let verify_opts = VerifyOptions {
        qm_max: opts.build.qm_max,
    };
    let verifier = check_solution_with(&norm, profiles, &solution, opts.verify_tol, &verify_opts)
        .map_err(|e| ScenarioError::VerificationFailed(e.to_string()))?;
    if !verifier.pass() {
        return Err(ScenarioError::VerificationFailed(verifier.to_text()));
    }

    let oracle = linearization_error(&norm, profiles, &solution)
        .map_err(|e| ScenarioError::Oracle(e.to_string()))?;

    Ok(RunReport {
        objective_usd: solution.objective_usd,
        losses_kw: solution.total_losses_kw,
        status: solution.status,
        iterations: trace.iterations(),
        converged: trace.converged,
        trace,
        verifier,
        oracle,
        solution,
        network: net.clone(),
        profiles: profiles.clone(),
    })
}

/// File-driven run: load, parse, transform, solve, verify, emit.
pub fn run(config: &ScenarioConfig) -> Result<RunReport, ScenarioError> {
    let net_text = fs::read_to_string(&config.network)
        .map_err(|e| ScenarioError::Load(format!("{}: {e}", config.network.display())))?;
    let net = parse_network(&net_text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let profile_text = fs::read_to_string(&config.profiles)
        .map_err(|e| ScenarioError::Load(format!("{}: {e}", config.profiles.display())))?;
    let profiles =
        parse_profiles(&profile_text, &net).map_err(|e| ScenarioError::Parse(e.to_string()))?;

    let (net, profiles) = apply_case_transform(
        &net,
        &profiles,
        config.case,
        &config.relocate_loads,
        &config.relocate_ders,
    )?;

    let report = run_scenario(&net, &profiles, &config.run_options())?;
    if let Some(dir) = &config.out {
        emit_reports(&report, dir)?;
    }
    Ok(report)
}

/// Runs two scenarios concurrently (case comparisons).
pub fn run_pair(
    a: &ScenarioConfig,
    b: &ScenarioConfig,
) -> (Result<RunReport, ScenarioError>, Result<RunReport, ScenarioError>) {
    std::thread::scope(|scope| {
        let ha = scope.spawn(|| run(a));
        let hb = scope.spawn(|| run(b));
        (
            ha.join().expect("scenario thread must not panic"),
            hb.join().expect("scenario thread must not panic"),
        )
    })
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

pub fn status_str(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::FeasibleNonconverged => "feasible-nonconverged",
        SolveStatus::Infeasible => "infeasible",
    }
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), ScenarioError> {
    fs::write(dir.join(name), content)
        .map_err(|e| ScenarioError::Emit(format!("{name}: {e}")))
}

/// Writes the CSV/JSON report set. Numbers use the shortest round-trippable
/// decimal form, so re-parsing reproduces the values bit-exactly.
pub fn emit_reports(report: &RunReport, dir: &Path) -> Result<(), ScenarioError> {
    fs::create_dir_all(dir).map_err(|e| ScenarioError::Emit(e.to_string()))?;
    let sol = &report.solution;
    let net = &report.network;
    let s_base = sol.s_base;

    let mut schedule = String::from("unit,hour,p_kw,q_kvar,on,startup,shutdown\n");
    for (g, gen) in net.generators.iter().enumerate() {
        let sched = &sol.generators[g];
        for t in 0..sol.horizon {
            schedule.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                gen.id,
                t,
                sched.p[t] * s_base,
                sched.q[t] * s_base,
                sched.on[t] as u8,
                sched.startup[t] as u8,
                sched.shutdown[t] as u8
            ));
        }
    }
    write_file(dir, "schedule.csv", &schedule)?;

    let mut des = String::from("storage,hour,state,p_kw,p_ch_kw,p_dch_kw,energy_kwh\n");
    for (s, sto) in net.storages.iter().enumerate() {
        let sched = &sol.storages[s];
        for t in 0..sol.horizon {
            des.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                sto.id,
                t,
                sol.storage_state(s, t),
                sched.p_b[t] * s_base,
                sched.p_ch[t] * s_base,
                sched.p_dch[t] * s_base,
                sched.energy[t] * s_base
            ));
        }
    }
    write_file(dir, "des.csv", &des)?;

    let mut flows = String::from("line,hour,pl_fwd_kw,pl_rev_kw,ql_fwd_kvar,ql_rev_kvar,loss_kw\n");
    for (l, line) in net.lines.iter().enumerate() {
        let Some(f) = &sol.lines[l] else { continue };
        for t in 0..sol.horizon {
            let (qf, qr) = if f.ql_fwd.is_empty() {
                (0.0, 0.0)
            } else {
                (f.ql_fwd[t] * s_base, f.ql_rev[t] * s_base)
            };
            flows.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                line.id,
                t,
                f.pl_fwd[t] * s_base,
                f.pl_rev[t] * s_base,
                qf,
                qr,
                f.loss[t] * s_base
            ));
        }
    }
    write_file(dir, "flows.csv", &flows)?;

    let mut exchange = String::from("bus,hour,pm_kw,qm_kvar\n");
    for pcc in &sol.exchange {
        for t in 0..sol.horizon {
            let qm = if pcc.qm.is_empty() { 0.0 } else { pcc.qm[t] * s_base };
            exchange.push_str(&format!(
                "{},{},{},{}\n",
                net.buses[pcc.bus].id,
                t,
                pcc.pm[t] * s_base,
                qm
            ));
        }
    }
    write_file(dir, "exchange.csv", &exchange)?;

    let mut voltages = String::from("bus,hour,dv,dth,dv_hat\n");
    for (b, bus) in net.buses.iter().enumerate() {
        for t in 0..sol.horizon {
            voltages.push_str(&format!(
                "{},{},{},{},{}\n",
                bus.id,
                t,
                sol.bus_dv[t][b],
                sol.bus_dth[t][b],
                sol.point.get(b, t).unwrap_or(0.0)
            ));
        }
    }
    write_file(dir, "voltages.csv", &voltages)?;

    // Hourly cost stack for plotting.
    let mut plot = String::from("hour");
    for gen in net.generators.iter().filter(|g| g.dispatchable) {
        plot.push_str(&format!(",cost_{}_usd", gen.id));
    }
    plot.push_str(",exchange_usd,total_usd\n");
    for t in 0..sol.horizon {
        let mut total = 0.0;
        plot.push_str(&t.to_string());
        for (g, gen) in net.generators.iter().enumerate() {
            if !gen.dispatchable {
                continue;
            }
            let c = gen.cost * s_base * sol.generators[g].p[t];
            total += c;
            plot.push_str(&format!(",{c}"));
        }
        let ex: f64 = sol
            .exchange
            .iter()
            .map(|p| report.profiles.price[t] * s_base * p.pm[t])
            .sum();
        total += ex;
        plot.push_str(&format!(",{ex},{total}\n"));
    }
    write_file(dir, "plotdata.csv", &plot)?;

    write_file(dir, "trace.csv", &report.trace.to_csv())?;
    write_file(dir, "oracle_error.csv", &report.oracle.to_csv())?;
    write_file(dir, "verifier.txt", &report.verifier.to_text())?;

    let summary = serde_json::json!({
        "objective_usd": report.objective_usd,
        "losses_kw": report.losses_kw,
        "status": status_str(report.status),
        "iterations": report.iterations,
        "converged": report.converged,
        "guard_engaged": report.trace.guard_engaged,
        "verifier_pass": report.verifier.pass(),
        "verifier_max_residual": report.verifier.max_residual,
        "oracle_max_v_error": report.oracle.max_v_error,
        "oracle_max_flow_error_frac": report.oracle.max_flow_error_frac,
    });
    write_file(
        dir,
        "summary.json",
        &format!("{}\n", serde_json::to_string_pretty(&summary).expect("json")),
    )
}

/// Side-by-side emission for a scenario comparison.
pub fn emit_comparison(
    labels: (&str, &str),
    a: &RunReport,
    b: &RunReport,
    dir: &Path,
) -> Result<(), ScenarioError> {
    fs::create_dir_all(dir).map_err(|e| ScenarioError::Emit(e.to_string()))?;
    let mut out = String::from("scenario,total_losses_kw,total_cost_usd,status,iterations\n");
    for (label, r) in [(labels.0, a), (labels.1, b)] {
        out.push_str(&format!(
            "{label},{},{},{},{}\n",
            r.losses_kw,
            r.objective_usd,
            status_str(r.status),
            r.iterations
        ));
    }
    out.push_str(&format!(
        "delta,{},{},,\n",
        b.losses_kw - a.losses_kw,
        b.objective_usd - a.objective_usd
    ));
    write_file(dir, "comparison.csv", &out)
}

// ---------------------------------------------------------------------------
// Report read-back
// ---------------------------------------------------------------------------

/// Reconstructs a `Solution` from an emitted report directory; used to show
/// verification verdicts survive the CSV round trip.
pub fn read_solution(
    dir: &Path,
    net: &Network,
    profiles: &ProfileSet,
) -> Result<Solution, ScenarioError> {
    let norm = to_per_unit(net).map_err(|e| ScenarioError::Normalize(e.to_string()))?;
    let horizon = profiles.horizon;
    let s_base = norm.s_base;
    let idx = net.bus_index();
    let read = |name: &str| -> Result<String, ScenarioError> {
        fs::read_to_string(dir.join(name)).map_err(|e| ScenarioError::Load(format!("{name}: {e}")))
    };

    let summary: serde_json::Value = serde_json::from_str(&read("summary.json")?)
        .map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let status = match summary["status"].as_str() {
        Some("optimal") => SolveStatus::Optimal,
        Some("feasible-nonconverged") => SolveStatus::FeasibleNonconverged,
        _ => SolveStatus::Infeasible,
    };

    let mut bus_dv = vec![vec![0.0; norm.buses.len()]; horizon];
    let mut bus_dth = vec![vec![0.0; norm.buses.len()]; horizon];
    let mut dv_hat = vec![vec![0.0; norm.buses.len()]; horizon];
    let voltages_text = read("voltages.csv")?;
    let mut rdr = csv::Reader::from_reader(voltages_text.as_bytes());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ScenarioError::Parse(e.to_string()))?;
        let b = idx[&rec[0].to_string()];
        let t: usize = rec[1].parse().map_err(|_| bad("hour"))?;
        bus_dv[t][b] = rec[2].parse().map_err(|_| bad("dv"))?;
        bus_dth[t][b] = rec[3].parse().map_err(|_| bad("dth"))?;
        dv_hat[t][b] = rec[4].parse().map_err(|_| bad("dv_hat"))?;
    }

    let mut lines = vec![
        Some(crate::scheduler::LineFlows {
            pl_fwd: vec![0.0; horizon],
            pl_rev: vec![0.0; horizon],
            ql_fwd: vec![0.0; horizon],
            ql_rev: vec![0.0; horizon],
            loss: vec![0.0; horizon],
        });
        net.lines.len()
    ];
    for (l, line) in net.lines.iter().enumerate() {
        if line.open {
            lines[l] = None;
        } else if line.kind == BusKind::DC {
            let f = lines[l].as_mut().expect("closed");
            f.ql_fwd.clear();
            f.ql_rev.clear();
        }
    }
    let flows_text = read("flows.csv")?;
    let mut rdr = csv::Reader::from_reader(flows_text.as_bytes());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ScenarioError::Parse(e.to_string()))?;
        let l = net
            .lines
            .iter()
            .position(|x| x.id == rec[0])
            .ok_or_else(|| bad("line id"))?;
        let t: usize = rec[1].parse().map_err(|_| bad("hour"))?;
        if let Some(f) = lines[l].as_mut() {
            f.pl_fwd[t] = rec[2].parse::<f64>().map_err(|_| bad("pl"))? / s_base;
            f.pl_rev[t] = rec[3].parse::<f64>().map_err(|_| bad("pl"))? / s_base;
            if !f.ql_fwd.is_empty() {
                f.ql_fwd[t] = rec[4].parse::<f64>().map_err(|_| bad("ql"))? / s_base;
                f.ql_rev[t] = rec[5].parse::<f64>().map_err(|_| bad("ql"))? / s_base;
            }
            f.loss[t] = rec[6].parse::<f64>().map_err(|_| bad("loss"))? / s_base;
        }
    }

    let mut generators = vec![
        crate::scheduler::DgSchedule {
            p: vec![0.0; horizon],
            q: vec![0.0; horizon],
            on: vec![true; horizon],
            startup: vec![false; horizon],
            shutdown: vec![false; horizon],
        };
        net.generators.len()
    ];
    let schedule_text = read("schedule.csv")?;
    let mut rdr = csv::Reader::from_reader(schedule_text.as_bytes());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ScenarioError::Parse(e.to_string()))?;
        let g = net
            .generators
            .iter()
            .position(|x| x.id == rec[0])
            .ok_or_else(|| bad("unit id"))?;
        let t: usize = rec[1].parse().map_err(|_| bad("hour"))?;
        generators[g].p[t] = rec[2].parse::<f64>().map_err(|_| bad("p"))? / s_base;
        generators[g].q[t] = rec[3].parse::<f64>().map_err(|_| bad("q"))? / s_base;
        generators[g].on[t] = &rec[4] == "1";
        generators[g].startup[t] = &rec[5] == "1";
        generators[g].shutdown[t] = &rec[6] == "1";
    }

    let mut storages = vec![
        crate::scheduler::StorageSchedule {
            p_b: vec![0.0; horizon],
            p_ch: vec![0.0; horizon],
            p_dch: vec![0.0; horizon],
            energy: vec![0.0; horizon],
            charging: vec![false; horizon],
            discharging: vec![false; horizon],
        };
        net.storages.len()
    ];
    let des_text = read("des.csv")?;
    let mut rdr = csv::Reader::from_reader(des_text.as_bytes());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ScenarioError::Parse(e.to_string()))?;
        let s = net
            .storages
            .iter()
            .position(|x| x.id == rec[0])
            .ok_or_else(|| bad("storage id"))?;
        let t: usize = rec[1].parse().map_err(|_| bad("hour"))?;
        storages[s].p_b[t] = rec[3].parse::<f64>().map_err(|_| bad("pb"))? / s_base;
        storages[s].p_ch[t] = rec[4].parse::<f64>().map_err(|_| bad("pch"))? / s_base;
        storages[s].p_dch[t] = rec[5].parse::<f64>().map_err(|_| bad("pdch"))? / s_base;
        storages[s].energy[t] = rec[6].parse::<f64>().map_err(|_| bad("e"))? / s_base;
        storages[s].charging[t] = storages[s].p_ch[t] < -1e-12;
        storages[s].discharging[t] = storages[s].p_dch[t] > 1e-12;
    }

    // Converter schedules are not part of the CSV set; reconstruct the
    // converter-free invariants only when the network has none.
    let converters = vec![
        crate::scheduler::ConverterSchedule {
            rect: vec![0.0; horizon],
            inv: vec![0.0; horizon],
            rectifying: vec![false; horizon],
            qc: vec![0.0; horizon],
        };
        net.converters.len()
    ];

    let mut exchange = Vec::new();
    let exchange_text = read("exchange.csv")?;
    let mut rdr = csv::Reader::from_reader(exchange_text.as_bytes());
    let mut rows: Vec<(usize, usize, f64, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ScenarioError::Parse(e.to_string()))?;
        let b = idx[&rec[0].to_string()];
        let t: usize = rec[1].parse().map_err(|_| bad("hour"))?;
        rows.push((
            b,
            t,
            rec[2].parse::<f64>().map_err(|_| bad("pm"))? / s_base,
            rec[3].parse::<f64>().map_err(|_| bad("qm"))? / s_base,
        ));
    }
    for (b, bus) in net.buses.iter().enumerate() {
        if !bus.pcc {
            continue;
        }
        let mut pm = vec![0.0; horizon];
        let mut qm = if bus.kind == BusKind::AC {
            vec![0.0; horizon]
        } else {
            Vec::new()
        };
        for &(rb, t, p, q) in &rows {
            if rb == b {
                pm[t] = p;
                if !qm.is_empty() {
                    qm[t] = q;
                }
            }
        }
        exchange.push(crate::scheduler::PccExchange { bus: b, pm, qm });
    }

    Ok(Solution {
        status,
        objective_usd: summary["objective_usd"].as_f64().unwrap_or(0.0),
        total_losses_kw: summary["losses_kw"].as_f64().unwrap_or(0.0),
        horizon,
        s_base,
        point: LinearizationPoint::from_rows(dv_hat),
        bus_dv,
        bus_dth,
        lines,
        generators,
        storages,
        converters,
        exchange,
    })
}

fn bad(field: &str) -> ScenarioError {
    ScenarioError::Parse(format!("malformed {field} in report CSV"))
}

/// Pins covering the commitment binaries of `pattern` (positions in the
/// model's binary list that belong to unit on/off states).
fn commitment_pins(
    model: &crate::scheduler::MilpModel,
    pattern: &[bool],
) -> Vec<(usize, bool)> {
    let binaries = model.binary_vars();
    let mut is_commitment = vec![false; binaries.len()];
    let mut ordinal_of = std::collections::BTreeMap::new();
    for (k, v) in binaries.iter().enumerate() {
        ordinal_of.insert(v.index(), k);
    }
    for iv in model.index.gen_i.iter().flatten() {
        for v in iv {
            if let Some(&k) = ordinal_of.get(&v.index()) {
                is_commitment[k] = true;
            }
        }
    }
    pattern
        .iter()
        .enumerate()
        .filter(|(k, _)| is_commitment[*k])
        .map(|(k, &v)| (k, v))
        .collect()
}
