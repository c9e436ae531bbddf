//! Bundled exact MILP solver: bounded revised simplex for LP relaxations plus
//! branch-and-bound, behind a backend trait that alternate engines can
//! satisfy.
//!
//! Problems are scaled by two passes of geometric-mean row/column
//! equilibration before the simplex sees them (admittance-derived
//! coefficients span several orders of magnitude); binary columns are exempt
//! so integrality is untouched. Every optimal solve is post-checked against
//! the unscaled rows, and numerical trouble surfaces as an error rather than
//! a silent bad answer.

mod branch;
mod lpfile;
mod lu;
mod simplex;

pub use branch::solve_milp;
pub use lpfile::parse_lp;
pub use simplex::Basis;

use thiserror::Error;

use crate::scheduler::{MilpModel, VarKind};
use simplex::{Simplex, SimplexResult, SimplexStatus};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("malformed problem: {0}")]
    BadProblem(String),
    #[error("backend `{0}` unavailable")]
    BackendUnavailable(String),
    #[error("limit reached before any feasible point was found")]
    LimitWithoutIncumbent,
    #[error("lp parse error: {0}")]
    LpParse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Sparse LP in natural form: bounded variables, rows with senses.
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
}

impl LpProblem {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(SolverError::BadProblem(format!(
                "bounds cover {}/{} variables, objective has {}",
                self.lower.len(),
                self.upper.len(),
                n
            )));
        }
        for row in &self.rows {
            for &(j, v) in &row.coeffs {
                if j >= n {
                    return Err(SolverError::BadProblem(format!(
                        "row references variable {j}, only {n} exist"
                    )));
                }
                if !v.is_finite() {
                    return Err(SolverError::BadProblem("non-finite coefficient".into()));
                }
            }
            if !row.rhs.is_finite() {
                return Err(SolverError::BadProblem("non-finite rhs".into()));
            }
        }
        Ok(())
    }

    /// Worst violation of rows and bounds at `x` (positive means violated).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
            let resid = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(resid);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// A binary counts as integral within this distance of 0/1.
    pub int_tol: f64,
    /// Reduced-cost tolerance for LP optimality.
    pub lp_tol: f64,
    /// Relative MIP gap at which branch-and-bound stops.
    pub mip_gap: f64,
    pub node_limit: usize,
    pub time_limit: Option<std::time::Duration>,
    /// Optional pattern (per binary, in instance order) used to seed the
    /// incumbent before branching starts.
    pub incumbent_seed: Option<Vec<bool>>,
    /// Optional pattern pinning every binary; turns the MILP into one LP.
    pub fixed_binaries: Option<Vec<bool>>,
    /// Pins for a subset of binaries, as (position in the instance's binary
    /// list, value).
    pub pinned_binaries: Option<Vec<(usize, bool)>>,
    /// Basis to warm-start the root relaxation from.
    pub warm_basis: Option<Basis>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            int_tol: 1e-6,
            lp_tol: 1e-9,
            mip_gap: 1e-6,
            node_limit: 500_000,
            time_limit: None,
            incumbent_seed: None,
            fixed_binaries: None,
            pinned_binaries: None,
            warm_basis: None,
        }
    }
}

impl SolverOptions {
    pub fn with_gap(gap: f64) -> Self {
        SolverOptions {
            mip_gap: gap,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeStatus {
    Optimal,
    /// Feasible incumbent returned after a node/time limit; not proven
    /// optimal within the gap.
    FeasibleNonconverged,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct SolverOutcome {
    pub status: OutcomeStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    /// Proven lower bound (minimization); equals the objective for LPs.
    pub bound: f64,
    pub node_count: usize,
    /// Row duals from the final basis (LP solves and fixed-binary solves).
    pub row_duals: Vec<f64>,
}

impl SolverOutcome {
    fn empty(status: OutcomeStatus, n: usize, m: usize) -> SolverOutcome {
        SolverOutcome {
            status,
            values: vec![0.0; n],
            objective: f64::INFINITY,
            bound: f64::NEG_INFINITY,
            node_count: 0,
            row_duals: vec![0.0; m],
        }
    }
}

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

/// Two passes of geometric-mean equilibration, factors rounded to powers of
/// two. Columns listed in `skip_col` keep scale 1.
pub(crate) fn geometric_scaling(p: &LpProblem, skip_col: &[bool]) -> Scaling {
    let n = p.num_vars();
    let m = p.rows.len();
    let mut row = vec![1.0f64; m];
    let mut col = vec![1.0f64; n];

    let pow2 = |v: f64| -> f64 {
        if v <= 0.0 || !v.is_finite() {
            1.0
        } else {
            (-(v.log2()) / 2.0).round().exp2()
        }
    };

    for _pass in 0..2 {
        for (i, r) in p.rows.iter().enumerate() {
            let mut min = f64::INFINITY;
            let mut max = 0.0f64;
            for &(j, v) in &r.coeffs {
                let a = (v * row[i] * col[j]).abs();
                if a > 0.0 {
                    min = min.min(a);
                    max = max.max(a);
                }
            }
            if max > 0.0 {
                row[i] *= pow2(min * max);
            }
        }
        let mut cmin = vec![f64::INFINITY; n];
        let mut cmax = vec![0.0f64; n];
        for (i, r) in p.rows.iter().enumerate() {
            for &(j, v) in &r.coeffs {
                let a = (v * row[i] * col[j]).abs();
                if a > 0.0 {
                    cmin[j] = cmin[j].min(a);
                    cmax[j] = cmax[j].max(a);
                }
            }
        }
        for j in 0..n {
            if cmax[j] > 0.0 && !skip_col[j] {
                col[j] *= pow2(cmin[j] * cmax[j]);
            }
        }
    }
    Scaling { row, col }
}

pub(crate) fn apply_scaling(p: &LpProblem, s: &Scaling) -> LpProblem {
    let n = p.num_vars();
    let mut out = p.clone();
    for j in 0..n {
        out.objective[j] *= s.col[j];
        out.lower[j] = p.lower[j] / s.col[j];
        out.upper[j] = p.upper[j] / s.col[j];
    }
    for (i, row) in out.rows.iter_mut().enumerate() {
        for (j, v) in row.coeffs.iter_mut() {
            *v *= s.row[i] * s.col[*j];
        }
        row.rhs *= s.row[i];
    }
    out
}

// ---------------------------------------------------------------------------
// LP solve entry
// ---------------------------------------------------------------------------

/// Column-major view of the row coefficients; shared across node solves.
pub(crate) fn build_cols(p: &LpProblem) -> Vec<Vec<(usize, f64)>> {
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.num_vars()];
    for (i, row) in p.rows.iter().enumerate() {
        for &(j, v) in &row.coeffs {
            if v != 0.0 {
                cols[j].push((i, v));
            }
        }
    }
    cols
}

/// Assembles the computational form: slack bounds encode the row senses.
pub(crate) fn build_simplex(
    p: &LpProblem,
    cols: std::rc::Rc<Vec<Vec<(usize, f64)>>>,
    lower: &[f64],
    upper: &[f64],
    lp_tol: f64,
) -> Simplex {
    let m = p.rows.len();
    let mut obj = p.objective.clone();
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    for row in &p.rows {
        obj.push(0.0);
        match row.sense {
            Sense::Le => {
                lo.push(0.0);
                hi.push(f64::INFINITY);
            }
            Sense::Ge => {
                lo.push(f64::NEG_INFINITY);
                hi.push(0.0);
            }
            Sense::Eq => {
                lo.push(0.0);
                hi.push(0.0);
            }
        }
    }
    let rhs = p.rows.iter().map(|r| r.rhs).collect();
    Simplex::new(m, cols, obj, lo, hi, rhs, lp_tol)
}

pub(crate) struct LpSolve {
    pub result: SimplexResult,
    pub scaling: Scaling,
}

/// Scaled simplex solve returning the raw result; callers unscale.
pub(crate) fn solve_lp_scaled(
    p: &LpProblem,
    lp_tol: f64,
    skip_col: &[bool],
    warm: Option<&Basis>,
) -> LpSolve {
    let scaling = geometric_scaling(p, skip_col);
    let scaled = apply_scaling(p, &scaling);
    let cols = std::rc::Rc::new(build_cols(&scaled));
    let mut simplex = build_simplex(&scaled, cols, &scaled.lower, &scaled.upper, lp_tol);
    let result = simplex.solve(warm);
    LpSolve { result, scaling }
}

/// Solves a pure LP: optimal basic solution or an infeasible/unbounded
/// verdict; numerical failure is reported, never silent.
pub fn solve_lp(p: &LpProblem, options: &SolverOptions) -> Result<SolverOutcome, SolverError> {
    p.validate()?;
    let n = p.num_vars();
    let m = p.rows.len();
    for j in 0..n {
        if p.lower[j] > p.upper[j] {
            return Ok(SolverOutcome::empty(OutcomeStatus::Infeasible, n, m));
        }
    }

    let skip = vec![false; n];
    let solve = solve_lp_scaled(p, options.lp_tol, &skip, None);
    outcome_from_simplex(p, solve, options)
}

/// Solves the LP obtained by pinning every binary of `instance` to
/// `pattern`, optionally warm-starting from a previous basis. Successive
/// re-solves with nearly identical coefficients then stay on the same
/// optimal vertex, which is what the linearization loop needs to settle
/// when the optimum is degenerate.
pub fn solve_fixed_lp(
    instance: &MilpInstance,
    pattern: &[bool],
    options: &SolverOptions,
    warm: Option<&Basis>,
) -> Result<(SolverOutcome, Basis), SolverError> {
    if pattern.len() != instance.binaries.len() {
        return Err(SolverError::BadProblem(format!(
            "pattern covers {} of {} binaries",
            pattern.len(),
            instance.binaries.len()
        )));
    }
    let mut fixed = instance.clone();
    fixed.fix_binaries(pattern);
    fixed.lp.validate()?;
    let n = fixed.lp.num_vars();
    let mut skip = vec![false; n];
    for &j in &fixed.binaries {
        skip[j] = true;
    }
    let solve = solve_lp_scaled(&fixed.lp, options.lp_tol, &skip, warm);
    let basis = solve.result.basis.clone();
    let outcome = outcome_from_simplex(&fixed.lp, solve, options)?;
    Ok((outcome, basis))
}

pub(crate) fn outcome_from_simplex(
    original: &LpProblem,
    solve: LpSolve,
    _options: &SolverOptions,
) -> Result<SolverOutcome, SolverError> {
    let n = original.num_vars();
    let m = original.rows.len();
    let LpSolve { result, scaling } = solve;
    match result.status {
        SimplexStatus::Optimal => {
            let mut x = vec![0.0; n];
            for j in 0..n {
                x[j] = result.x[j] * scaling.col[j];
            }
            let mut duals = vec![0.0; m];
            for i in 0..m {
                duals[i] = result.duals[i] * scaling.row[i];
            }
            let viol = original.max_violation(&x);
            if viol > 1e-7 {
                return Err(SolverError::Numerical(format!(
                    "optimal solution violates rows by {viol:.3e}"
                )));
            }
            let objective = original.objective_value(&x);
            Ok(SolverOutcome {
                status: OutcomeStatus::Optimal,
                values: x,
                objective,
                bound: objective,
                node_count: 1,
                row_duals: duals,
            })
        }
        SimplexStatus::Infeasible => Ok(SolverOutcome::empty(OutcomeStatus::Infeasible, n, m)),
        SimplexStatus::Unbounded => Ok(SolverOutcome {
            status: OutcomeStatus::Unbounded,
            values: vec![0.0; n],
            objective: f64::NEG_INFINITY,
            bound: f64::NEG_INFINITY,
            node_count: 1,
            row_duals: vec![0.0; m],
        }),
        SimplexStatus::IterationLimit => Err(SolverError::Numerical(
            "simplex iteration limit exhausted".into(),
        )),
        SimplexStatus::Numerical => Err(SolverError::Numerical(
            "simplex lost numerical stability".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// MILP instances and the backend contract
// ---------------------------------------------------------------------------

/// A lowered model: the LP data plus which variables are binary and their
/// branching priority (lower value branches first).
#[derive(Debug, Clone)]
pub struct MilpInstance {
    pub lp: LpProblem,
    pub binaries: Vec<usize>,
    pub priorities: Vec<u8>,
}

impl MilpInstance {
    pub fn from_model(model: &MilpModel) -> MilpInstance {
        let n = model.vars().len();
        let mut lp = LpProblem {
            lower: Vec::with_capacity(n),
            upper: Vec::with_capacity(n),
            objective: vec![0.0; n],
            rows: Vec::with_capacity(model.rows().len()),
        };
        let mut binaries = Vec::new();
        let mut priorities = Vec::new();
        for (j, v) in model.vars().iter().enumerate() {
            lp.lower.push(v.lb);
            lp.upper.push(v.ub);
            if v.kind == VarKind::Binary {
                binaries.push(j);
                priorities.push(v.branch_priority);
            }
        }
        for &(var, coef) in model.objective() {
            lp.objective[var.index()] += coef;
        }
        for row in model.rows() {
            lp.rows.push(LpRow {
                coeffs: row.coeffs.iter().map(|&(v, c)| (v.index(), c)).collect(),
                sense: row.sense,
                rhs: row.rhs,
            });
        }
        MilpInstance {
            lp,
            binaries,
            priorities,
        }
    }

    /// Pins every binary to the given pattern (bounds [v, v]).
    pub fn fix_binaries(&mut self, pattern: &[bool]) {
        for (k, &j) in self.binaries.iter().enumerate() {
            let v = if pattern[k] { 1.0 } else { 0.0 };
            self.lp.lower[j] = v;
            self.lp.upper[j] = v;
        }
    }

    /// Pins one binary (by position in the binary list).
    pub fn pin_binary(&mut self, ordinal: usize, value: bool) {
        let j = self.binaries[ordinal];
        let v = if value { 1.0 } else { 0.0 };
        self.lp.lower[j] = v;
        self.lp.upper[j] = v;
    }
}

/// The observable solving contract: any engine that can take a model to a
/// proven-optimal (within gap) outcome may stand in for the bundled one.
pub trait SolveBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, model: &MilpModel, options: &SolverOptions)
        -> Result<SolverOutcome, SolverError>;
}

/// Bundled default: revised simplex + branch-and-bound.
#[derive(Debug, Default)]
pub struct BranchBoundBackend;

impl SolveBackend for BranchBoundBackend {
    fn name(&self) -> &str {
        "bundled-bnb"
    }

    fn solve(
        &self,
        model: &MilpModel,
        options: &SolverOptions,
    ) -> Result<SolverOutcome, SolverError> {
        let mut instance = MilpInstance::from_model(model);
        if let Some(pattern) = &options.fixed_binaries {
            if pattern.len() != instance.binaries.len() {
                return Err(SolverError::BadProblem(format!(
                    "fixed pattern covers {} of {} binaries",
                    pattern.len(),
                    instance.binaries.len()
                )));
            }
            instance.fix_binaries(pattern);
        }
        if let Some(pins) = &options.pinned_binaries {
            for &(ordinal, value) in pins {
                if ordinal >= instance.binaries.len() {
                    return Err(SolverError::BadProblem(format!(
                        "pin ordinal {ordinal} out of range"
                    )));
                }
                instance.pin_binary(ordinal, value);
            }
        }
        solve_milp(&instance, options)
    }
}

/// Exhaustive cross-check engine: enumerates the binary hypercube in Gray
/// order, warm-starting consecutive LPs. Guarded to small instances.
#[derive(Debug, Default)]
pub struct ExhaustiveBackend {
    pub max_binaries: usize,
}

impl ExhaustiveBackend {
    pub fn new() -> Self {
        ExhaustiveBackend { max_binaries: 20 }
    }
}

impl SolveBackend for ExhaustiveBackend {
    fn name(&self) -> &str {
        "exhaustive"
    }

    fn solve(
        &self,
        model: &MilpModel,
        options: &SolverOptions,
    ) -> Result<SolverOutcome, SolverError> {
        let mut instance = MilpInstance::from_model(model);
        if let Some(pattern) = &options.fixed_binaries {
            instance.fix_binaries(pattern);
        }
        if let Some(pins) = &options.pinned_binaries {
            for &(ordinal, value) in pins {
                instance.pin_binary(ordinal, value);
            }
        }
        let nb = instance.binaries.len();
        let cap = if self.max_binaries == 0 {
            20
        } else {
            self.max_binaries
        };
        if nb > cap {
            return Err(SolverError::BadProblem(format!(
                "exhaustive backend guard: {nb} binaries exceed cap {cap}"
            )));
        }
        instance.lp.validate()?;

        let n = instance.lp.num_vars();
        let m = instance.lp.rows.len();
        let skip: Vec<bool> = {
            let mut s = vec![false; n];
            for &j in &instance.binaries {
                s[j] = true;
            }
            s
        };

        let mut best: Option<SolverOutcome> = None;
        let mut lp = instance.lp.clone();
        let mut warm: Option<Basis> = None;
        let total = 1u64 << nb;
        for k in 0..total {
            let gray = k ^ (k >> 1);
            for (bit, &j) in instance.binaries.iter().enumerate() {
                // Respect pre-fixed binaries.
                if instance.lp.lower[j] == instance.lp.upper[j] {
                    continue;
                }
                let v = if gray >> bit & 1 == 1 { 1.0 } else { 0.0 };
                lp.lower[j] = v;
                lp.upper[j] = v;
            }
            let solve = solve_lp_scaled(&lp, options.lp_tol, &skip, warm.as_ref());
            let status = solve.result.status;
            if status == SimplexStatus::Optimal {
                warm = Some(solve.result.basis.clone());
            }
            match outcome_from_simplex(&lp, solve, options) {
                Ok(out) if out.status == OutcomeStatus::Optimal => {
                    if best.as_ref().is_none_or(|b| out.objective < b.objective) {
                        best = Some(out);
                    }
                }
                Ok(_) => {}
                Err(_) => {
                    // One bad vertex must not poison the sweep; retry cold.
                    warm = None;
                    let retry = solve_lp_scaled(&lp, options.lp_tol, &skip, None);
                    if let Ok(out) = outcome_from_simplex(&lp, retry, options) {
                        if out.status == OutcomeStatus::Optimal
                            && best.as_ref().is_none_or(|b| out.objective < b.objective)
                        {
                            best = Some(out);
                        }
                    }
                }
            }
        }
        match best {
            Some(mut out) => {
                out.node_count = total as usize;
                out.bound = out.objective;
                Ok(out)
            }
            None => Ok(SolverOutcome::empty(OutcomeStatus::Infeasible, n, m)),
        }
    }
}

/// Looks a backend up by name; unknown names report as unavailable.
pub fn backend_by_name(name: &str) -> Result<Box<dyn SolveBackend>, SolverError> {
    match name {
        "bundled-bnb" => Ok(Box::new(BranchBoundBackend)),
        "exhaustive" => Ok(Box::new(ExhaustiveBackend::new())),
        other => Err(SolverError::BackendUnavailable(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_lp() -> LpProblem {
        // max 3x + 2y s.t. x + y <= 4, x <= 2  (as min of the negation)
        LpProblem {
            lower: vec![0.0, 0.0],
            upper: vec![f64::INFINITY, f64::INFINITY],
            objective: vec![-3.0, -2.0],
            rows: vec![
                LpRow {
                    coeffs: vec![(0, 1.0), (1, 1.0)],
                    sense: Sense::Le,
                    rhs: 4.0,
                },
                LpRow {
                    coeffs: vec![(0, 1.0)],
                    sense: Sense::Le,
                    rhs: 2.0,
                },
            ],
        }
    }

    #[test]
    fn lp_solve_and_duality() {
        let p = simple_lp();
        let out = solve_lp(&p, &SolverOptions::default()).unwrap();
        assert_eq!(out.status, OutcomeStatus::Optimal);
        assert!((out.objective + 10.0).abs() < 1e-9);

        // Dual objective: y.b plus reduced-cost terms at active bounds; with
        // all structural lower bounds at 0 it reduces to y.b here.
        let dual_obj: f64 = out
            .row_duals
            .iter()
            .zip(p.rows.iter())
            .map(|(y, r)| y * r.rhs)
            .sum();
        assert!(
            (dual_obj - out.objective).abs() <= 1e-8 * out.objective.abs().max(1.0),
            "primal {} dual {}",
            out.objective,
            dual_obj
        );
    }

    #[test]
    fn infeasible_bounds_short_circuit() {
        let mut p = simple_lp();
        p.lower[0] = 3.0;
        p.upper[0] = 1.0;
        let out = solve_lp(&p, &SolverOptions::default()).unwrap();
        assert_eq!(out.status, OutcomeStatus::Infeasible);
    }

    #[test]
    fn scaling_keeps_solution() {
        let mut p = simple_lp();
        // Blow up one row by 1e6 and one column by 1e-4.
        for (j, v) in p.rows[0].coeffs.iter_mut() {
            *v *= 1e6;
            let _ = j;
        }
        p.rows[0].rhs *= 1e6;
        let out = solve_lp(&p, &SolverOptions::default()).unwrap();
        assert_eq!(out.status, OutcomeStatus::Optimal);
        assert!((out.objective + 10.0).abs() < 1e-8, "{}", out.objective);
        assert!((out.values[0] - 2.0).abs() < 1e-8);
        assert!((out.values[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn unknown_backend_reports_unavailable() {
        match backend_by_name("cplex") {
            Err(SolverError::BackendUnavailable(name)) => assert_eq!(name, "cplex"),
            _ => panic!("expected unavailable backend"),
        }
    }
}
