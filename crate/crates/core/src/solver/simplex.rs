//! Bounded-variable revised simplex over the LU basis engine.
//!
//! The computational form is `A x + s = rhs` with one slack per row; row
//! senses live in the slack bounds (<= gives s in [0, inf), >= gives
//! (-inf, 0], = fixes s at 0). Phase 1 minimizes the sum of bound violations
//! of the basic variables using +-1 costs on the violating basics, which
//! works from any starting basis and needs no artificial columns; phase 2
//! continues with the true objective from the feasible basis.
//!
//! Degeneracy is handled by a cycle heuristic: a long streak of zero-step
//! pivots switches pricing and the ratio test to Bland's rule until a real
//! step is taken. All tie-breaking is by lowest index, so identical inputs
//! pivot identically.

use std::rc::Rc;

use super::lu::{BasisColData, BasisLu};

const FEAS_TOL: f64 = 1e-9;
const PIVOT_ZERO: f64 = 1e-9;
const DEGEN_STREAK_LIMIT: usize = 256;
const REFACTOR_EVERY: usize = 100;
const ETA_FILL_LIMIT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    Numerical,
}

/// Snapshot of a basis for warm starts: one tag per variable (structural
/// then slack) plus the basic variable of each row slot.
#[derive(Debug, Clone)]
pub struct Basis {
    pub tags: Vec<u8>, // 0 = at lower, 1 = at upper, 2 = free at zero, 3 = basic
    pub basic: Vec<u32>,
}

pub struct SimplexResult {
    pub status: SimplexStatus,
    /// Values of all variables (structural then slack).
    pub x: Vec<f64>,
    /// Row duals from the final basis (true objective).
    pub duals: Vec<f64>,
    pub objective: f64,
    /// Pivot count, exercised by warm-start tests.
    #[allow(dead_code)]
    pub iterations: usize,
    pub basis: Basis,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    Free,
}

pub struct Simplex {
    m: usize,
    n_struct: usize,
    n_total: usize,
    cols: Rc<Vec<Vec<(usize, f64)>>>,
    obj: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,

    state: Vec<VarState>,
    basis: Vec<usize>,
    x: Vec<f64>,
    lu: Option<BasisLu>,

    dual_tol: f64,
    iter_limit: usize,

    phase_one: bool,
    bland: bool,
    degen_streak: usize,
    iterations: usize,

    // scratch
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Simplex {
    /// `cols` are the structural columns; slack columns are implicit. Bounds
    /// and objective cover structural variables then slacks.
    pub fn new(
        m: usize,
        cols: Rc<Vec<Vec<(usize, f64)>>>,
        obj: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        rhs: Vec<f64>,
        dual_tol: f64,
    ) -> Simplex {
        let n_struct = cols.len();
        let n_total = n_struct + m;
        debug_assert_eq!(obj.len(), n_total);
        debug_assert_eq!(lower.len(), n_total);
        debug_assert_eq!(upper.len(), n_total);
        let iter_limit = 100_000 + 40 * (n_total + m);
        Simplex {
            m,
            n_struct,
            n_total,
            cols,
            obj,
            lower,
            upper,
            rhs,
            state: Vec::new(),
            basis: Vec::new(),
            x: Vec::new(),
            lu: None,
            dual_tol,
            iter_limit,
            phase_one: false,
            bland: false,
            degen_streak: 0,
            iterations: 0,
            y: vec![0.0; m],
            w: vec![0.0; m],
        }
    }

    /// Replaces the structural bounds; the constraint matrix (and therefore
    /// any existing factorization) is untouched, which is what lets a
    /// branch-and-bound search re-solve thousands of bound variants cheaply.
    pub fn set_bounds(&mut self, lower: &[f64], upper: &[f64]) {
        debug_assert_eq!(lower.len(), self.n_struct);
        self.lower[..self.n_struct].copy_from_slice(lower);
        self.upper[..self.n_struct].copy_from_slice(upper);
    }

    pub fn solve(&mut self, warm: Option<&Basis>) -> SimplexResult {
        self.iterations = 0;
        // If the requested basis is the one already factorized, only the
        // variable values need refreshing.
        let reusable = warm.is_some_and(|b| {
            self.lu.is_some()
                && b.basic.len() == self.m
                && b.tags.len() == self.n_total
                && self
                    .basis
                    .iter()
                    .zip(&b.basic)
                    .all(|(&v, &w)| v == w as usize)
        });
        if reusable {
            self.apply_tags(warm.expect("reusable implies warm"));
            self.recompute_basic_values();
        } else if self.load_basis(warm).is_err() {
            // Singular warm basis (stale coefficients); fall back cold.
            if self.load_basis(None).is_err() {
                return self.finish(SimplexStatus::Numerical);
            }
        }
        self.phase_one = self.max_infeasibility() > FEAS_TOL;
        self.bland = false;
        self.degen_streak = 0;

        loop {
            if self.iterations >= self.iter_limit {
                return self.finish(SimplexStatus::IterationLimit);
            }
            let wants_refactor = self.lu.as_ref().is_some_and(|lu| {
                lu.updates_since_refactor() >= REFACTOR_EVERY || lu.fill_ratio() > ETA_FILL_LIMIT
            });
            if wants_refactor && self.refactorize().is_err() {
                return self.finish(SimplexStatus::Numerical);
            }

            self.compute_duals();
            let (q, dir) = match self.price() {
                Some(e) => e,
                None => {
                    if self.phase_one {
                        if self.max_infeasibility() > FEAS_TOL * 10.0 {
                            return self.finish(SimplexStatus::Infeasible);
                        }
                        self.phase_one = false;
                        self.bland = false;
                        continue;
                    }
                    return self.finish(SimplexStatus::Optimal);
                }
            };

            self.load_column(q);
            self.lu.as_mut().expect("basis factorized").ftran(&mut self.w);

            match self.ratio_test(q, dir) {
                Ratio::BoundFlip(step) => {
                    self.apply_step(q, dir, step, None);
                    self.state[q] = match self.state[q] {
                        VarState::AtLower => VarState::AtUpper,
                        VarState::AtUpper => VarState::AtLower,
                        s => s,
                    };
                    self.x[q] = match self.state[q] {
                        VarState::AtLower => self.lower[q],
                        _ => self.upper[q],
                    };
                    self.note_step(step);
                }
                Ratio::Block {
                    slot,
                    step,
                    to_upper,
                } => {
                    self.apply_step(q, dir, step, Some((slot, to_upper)));
                    let update_failed = self
                        .lu
                        .as_mut()
                        .expect("basis factorized")
                        .update(slot, &self.w)
                        .is_err();
                    if update_failed && self.refactorize().is_err() {
                        return self.finish(SimplexStatus::Numerical);
                    }
                    self.note_step(step);
                }
                Ratio::Unbounded => {
                    if self.phase_one {
                        // Infeasibility is bounded below; this is numerical.
                        return self.finish(SimplexStatus::Numerical);
                    }
                    return self.finish(SimplexStatus::Unbounded);
                }
            }
            self.iterations += 1;

            if self.phase_one && self.max_infeasibility() <= FEAS_TOL {
                self.phase_one = false;
                self.bland = false;
                self.degen_streak = 0;
            }
        }
    }

    fn note_step(&mut self, step: f64) {
        if step <= 1e-10 {
            self.degen_streak += 1;
            if self.degen_streak > DEGEN_STREAK_LIMIT {
                self.bland = true;
            }
        } else {
            self.degen_streak = 0;
            self.bland = false;
        }
    }

    fn finish(&mut self, status: SimplexStatus) -> SimplexResult {
        let objective = (0..self.n_total).map(|j| self.obj[j] * self.x[j]).sum();
        let tags = (0..self.n_total)
            .map(|j| match self.state[j] {
                VarState::AtLower => 0,
                VarState::AtUpper => 1,
                VarState::Free => 2,
                VarState::Basic(_) => 3,
            })
            .collect();
        self.compute_duals_final();
        SimplexResult {
            status,
            x: self.x.clone(),
            duals: self.y.clone(),
            objective,
            iterations: self.iterations,
            basis: Basis {
                tags,
                basic: self.basis.iter().map(|&v| v as u32).collect(),
            },
        }
    }

    // -- basis management ---------------------------------------------------

    /// Refreshes states and nonbasic values from a snapshot whose basic set
    /// matches the current factorization.
    fn apply_tags(&mut self, warm: &Basis) {
        for j in 0..self.n_total {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let mut state = match warm.tags[j] {
                1 => VarState::AtUpper,
                2 => VarState::Free,
                _ => VarState::AtLower,
            };
            let mut val = match state {
                VarState::AtLower => self.lower[j],
                VarState::AtUpper => self.upper[j],
                _ => 0.0,
            };
            if !val.is_finite() {
                state = self.default_nonbasic_state(j);
                val = match state {
                    VarState::AtLower => self.lower[j],
                    VarState::AtUpper => self.upper[j],
                    _ => 0.0,
                };
            }
            self.state[j] = state;
            self.x[j] = val;
        }
    }

    fn load_basis(&mut self, warm: Option<&Basis>) -> Result<(), ()> {
        self.state = vec![VarState::AtLower; self.n_total];
        self.basis = Vec::with_capacity(self.m);
        self.x = vec![0.0; self.n_total];

        let usable =
            warm.filter(|b| b.tags.len() == self.n_total && b.basic.len() == self.m);
        match usable {
            Some(b) => {
                let mut slot_of = vec![usize::MAX; self.n_total];
                for (slot, &v) in b.basic.iter().enumerate() {
                    if v as usize >= self.n_total || slot_of[v as usize] != usize::MAX {
                        return Err(());
                    }
                    slot_of[v as usize] = slot;
                    self.basis.push(v as usize);
                }
                for j in 0..self.n_total {
                    self.state[j] = match b.tags[j] {
                        1 => VarState::AtUpper,
                        2 => VarState::Free,
                        3 => {
                            if slot_of[j] == usize::MAX {
                                return Err(());
                            }
                            VarState::Basic(slot_of[j])
                        }
                        _ => VarState::AtLower,
                    };
                }
            }
            None => {
                for i in 0..self.m {
                    let s = self.n_struct + i;
                    self.basis.push(s);
                    self.state[s] = VarState::Basic(i);
                }
                for j in 0..self.n_struct {
                    self.state[j] = self.default_nonbasic_state(j);
                }
            }
        }

        // Nonbasic values come from bounds; a nonbasic tagged to an infinite
        // bound (possible after bound changes) gets re-homed.
        for j in 0..self.n_total {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let mut state = self.state[j];
            let mut val = match state {
                VarState::AtLower => self.lower[j],
                VarState::AtUpper => self.upper[j],
                _ => 0.0,
            };
            if !val.is_finite() {
                state = self.default_nonbasic_state(j);
                val = match state {
                    VarState::AtLower => self.lower[j],
                    VarState::AtUpper => self.upper[j],
                    _ => 0.0,
                };
            }
            self.state[j] = state;
            self.x[j] = val;
        }
        self.refactorize()
    }

    fn default_nonbasic_state(&self, j: usize) -> VarState {
        if self.lower[j].is_finite() {
            VarState::AtLower
        } else if self.upper[j].is_finite() {
            VarState::AtUpper
        } else {
            VarState::Free
        }
    }

    fn refactorize(&mut self) -> Result<(), ()> {
        let basis = self.basis.clone();
        let n_struct = self.n_struct;
        let cols = self.cols.clone();
        let lu = BasisLu::factorize(self.m, |slot| {
            let v = basis[slot];
            if v < n_struct {
                BasisColData::Sparse(cols[v].clone())
            } else {
                BasisColData::Unit(v - n_struct)
            }
        })
        .map_err(|_| ())?;
        self.lu = Some(lu);
        self.recompute_basic_values();
        Ok(())
    }

    /// x_B = B^-1 (rhs - N x_N)
    fn recompute_basic_values(&mut self) {
        let mut b = self.rhs.clone();
        for j in 0..self.n_total {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let xj = self.x[j];
            if xj == 0.0 {
                continue;
            }
            if j < self.n_struct {
                for &(i, v) in &self.cols[j] {
                    b[i] -= v * xj;
                }
            } else {
                b[j - self.n_struct] -= xj;
            }
        }
        self.lu.as_mut().expect("factorized").ftran(&mut b);
        for slot in 0..self.m {
            self.x[self.basis[slot]] = b[slot];
        }
    }

    fn max_infeasibility(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &v in &self.basis {
            let x = self.x[v];
            worst = worst.max(self.lower[v] - x).max(x - self.upper[v]);
        }
        worst
    }

    // -- pricing ------------------------------------------------------------

    fn phase_cost(&self, j: usize) -> f64 {
        if self.phase_one {
            let x = self.x[j];
            if x < self.lower[j] - FEAS_TOL {
                -1.0
            } else if x > self.upper[j] + FEAS_TOL {
                1.0
            } else {
                0.0
            }
        } else {
            self.obj[j]
        }
    }

    fn compute_duals(&mut self) {
        for slot in 0..self.m {
            self.y[slot] = self.phase_cost(self.basis[slot]);
        }
        self.lu.as_mut().expect("factorized").btran(&mut self.y);
    }

    fn compute_duals_final(&mut self) {
        match &mut self.lu {
            None => self.y.iter_mut().for_each(|v| *v = 0.0),
            Some(lu) => {
                for slot in 0..self.m {
                    self.y[slot] = self.obj[self.basis[slot]];
                }
                lu.btran(&mut self.y);
            }
        }
    }

    fn reduced_cost(&self, j: usize) -> f64 {
        let c = if self.phase_one { 0.0 } else { self.obj[j] };
        if j < self.n_struct {
            let mut acc = c;
            for &(i, v) in &self.cols[j] {
                acc -= self.y[i] * v;
            }
            acc
        } else {
            c - self.y[j - self.n_struct]
        }
    }

    /// Entering variable and its movement direction. Dantzig pricing with
    /// lowest-index ties; first eligible index under Bland's rule.
    fn price(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n_total {
            if self.lower[j] == self.upper[j] {
                continue; // fixed vars never enter
            }
            let (eligible, dir, score) = match self.state[j] {
                VarState::Basic(_) => continue,
                VarState::AtLower => {
                    let d = self.reduced_cost(j);
                    (d < -self.dual_tol, 1.0, -d)
                }
                VarState::AtUpper => {
                    let d = self.reduced_cost(j);
                    (d > self.dual_tol, -1.0, d)
                }
                VarState::Free => {
                    let d = self.reduced_cost(j);
                    (
                        d.abs() > self.dual_tol,
                        if d < 0.0 { 1.0 } else { -1.0 },
                        d.abs(),
                    )
                }
            };
            if !eligible {
                continue;
            }
            if self.bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn load_column(&mut self, q: usize) {
        self.w.iter_mut().for_each(|v| *v = 0.0);
        if q < self.n_struct {
            for &(i, v) in &self.cols[q] {
                self.w[i] = v;
            }
        } else {
            self.w[q - self.n_struct] = 1.0;
        }
    }

    // -- ratio test ---------------------------------------------------------

    fn ratio_test(&self, q: usize, dir: f64) -> Ratio {
        let own_range = self.upper[q] - self.lower[q];
        let mut best_step = if own_range.is_finite() {
            own_range
        } else {
            f64::INFINITY
        };
        let mut block: Option<(usize, bool, f64)> = None; // (slot, to_upper, |w|)

        for slot in 0..self.m {
            let wi = self.w[slot];
            if wi.abs() <= PIVOT_ZERO {
                continue;
            }
            let v = self.basis[slot];
            let xv = self.x[v];
            let rate = -dir * wi; // d x_B[slot] / d step
            let (lo, hi) = (self.lower[v], self.upper[v]);

            // In phase 1 an out-of-bounds basic only blocks when it reaches
            // the bound it violates; moving further out is allowed (the
            // objective accounts for it).
            let candidate: Option<(f64, bool)> = if self.phase_one && xv < lo - FEAS_TOL {
                (rate > 0.0).then(|| ((lo - xv) / rate, false))
            } else if self.phase_one && xv > hi + FEAS_TOL {
                (rate < 0.0).then(|| ((xv - hi) / -rate, true))
            } else if rate < 0.0 {
                lo.is_finite().then(|| ((xv - lo).max(0.0) / -rate, false))
            } else if rate > 0.0 && hi.is_finite() {
                Some(((hi - xv).max(0.0) / rate, true))
            } else {
                None
            };

            if let Some((limit, to_upper)) = candidate {
                let limit = limit.max(0.0);
                let take = if limit < best_step - 1e-12 {
                    true
                } else if limit <= best_step + 1e-12 {
                    match &block {
                        None => limit < best_step,
                        Some((s, _, wa)) => {
                            if self.bland {
                                v < self.basis[*s]
                            } else {
                                wi.abs() > *wa
                            }
                        }
                    }
                } else {
                    false
                };
                if take {
                    best_step = best_step.min(limit);
                    block = Some((slot, to_upper, wi.abs()));
                }
            }
        }

        match block {
            None if best_step.is_infinite() => Ratio::Unbounded,
            None => Ratio::BoundFlip(best_step),
            Some((slot, to_upper, _)) => Ratio::Block {
                slot,
                step: best_step.max(0.0),
                to_upper,
            },
        }
    }

    fn apply_step(&mut self, q: usize, dir: f64, step: f64, pivot: Option<(usize, bool)>) {
        if step > 0.0 {
            for slot in 0..self.m {
                let wi = self.w[slot];
                if wi != 0.0 {
                    let v = self.basis[slot];
                    self.x[v] -= dir * step * wi;
                }
            }
            self.x[q] += dir * step;
        }
        if let Some((slot, to_upper)) = pivot {
            let leaving = self.basis[slot];
            self.state[leaving] = if to_upper {
                self.x[leaving] = self.upper[leaving];
                VarState::AtUpper
            } else {
                self.x[leaving] = self.lower[leaving];
                VarState::AtLower
            };
            self.basis[slot] = q;
            self.state[q] = VarState::Basic(slot);
        }
    }
}

enum Ratio {
    /// Entering variable runs to its other bound; no basis change.
    BoundFlip(f64),
    /// Basic variable at `slot` leaves at one of its bounds.
    Block {
        slot: usize,
        step: f64,
        to_upper: bool,
    },
    Unbounded,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve_dense(
        rows: &[(&[f64], f64)],
        senses: &[i8], // -1 le, 0 eq, 1 ge
        obj: &[f64],
        lower: &[f64],
        upper: &[f64],
    ) -> SimplexResult {
        let m = rows.len();
        let n = obj.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, (coeffs, _)) in rows.iter().enumerate() {
            for (j, &v) in coeffs.iter().enumerate() {
                if v != 0.0 {
                    cols[j].push((i, v));
                }
            }
        }
        let mut full_obj = obj.to_vec();
        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        for &s in senses {
            full_obj.push(0.0);
            match s {
                -1 => {
                    lo.push(0.0);
                    hi.push(f64::INFINITY);
                }
                1 => {
                    lo.push(f64::NEG_INFINITY);
                    hi.push(0.0);
                }
                _ => {
                    lo.push(0.0);
                    hi.push(0.0);
                }
            }
        }
        let rhs = rows.iter().map(|(_, b)| *b).collect();
        let mut s = Simplex::new(m, Rc::new(cols), full_obj, lo, hi, rhs, 1e-9);
        s.solve(None)
    }

    #[test]
    fn maximization_via_negated_objective() {
        // max 3x + 2y s.t. x + y <= 4, x <= 2, x,y >= 0  ->  x=2, y=2, obj 10.
        let res = solve_dense(
            &[(&[1.0, 1.0], 4.0), (&[1.0, 0.0], 2.0)],
            &[-1, -1],
            &[-3.0, -2.0],
            &[0.0, 0.0],
            &[f64::INFINITY, f64::INFINITY],
        );
        assert_eq!(res.status, SimplexStatus::Optimal);
        assert!((res.x[0] - 2.0).abs() < 1e-9);
        assert!((res.x[1] - 2.0).abs() < 1e-9);
        assert!((res.objective + 10.0).abs() < 1e-9);
    }

    #[test]
    fn empty_objective_feasible_box() {
        let res = solve_dense(
            &[(&[1.0, 1.0], 4.0)],
            &[-1],
            &[0.0, 0.0],
            &[0.0, 0.0],
            &[1.0, 1.0],
        );
        assert_eq!(res.status, SimplexStatus::Optimal);
        assert_eq!(res.objective, 0.0);
    }

    #[test]
    fn detects_infeasible_rows() {
        // x >= 1 and x <= 0
        let res = solve_dense(
            &[(&[1.0], 1.0), (&[1.0], 0.0)],
            &[1, -1],
            &[0.0],
            &[f64::NEG_INFINITY],
            &[f64::INFINITY],
        );
        assert_eq!(res.status, SimplexStatus::Infeasible);
    }

    #[test]
    fn equality_rows_and_free_variables() {
        // min x + y st x + y = 3, x - y = 1 -> x=2, y=1.
        let res = solve_dense(
            &[(&[1.0, 1.0], 3.0), (&[1.0, -1.0], 1.0)],
            &[0, 0],
            &[1.0, 1.0],
            &[f64::NEG_INFINITY, f64::NEG_INFINITY],
            &[f64::INFINITY, f64::INFINITY],
        );
        assert_eq!(res.status, SimplexStatus::Optimal);
        assert!((res.x[0] - 2.0).abs() < 1e-9);
        assert!((res.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_direction_detected() {
        let res = solve_dense(
            &[(&[1.0, -1.0], 1.0)],
            &[-1],
            &[-1.0, 0.0],
            &[0.0, 0.0],
            &[f64::INFINITY, f64::INFINITY],
        );
        assert_eq!(res.status, SimplexStatus::Unbounded);
    }

    #[test]
    fn upper_bounded_variables_flip() {
        // min -x - 2y with x,y in [0,1], x + y <= 1.5
        let res = solve_dense(
            &[(&[1.0, 1.0], 1.5)],
            &[-1],
            &[-1.0, -2.0],
            &[0.0, 0.0],
            &[1.0, 1.0],
        );
        assert_eq!(res.status, SimplexStatus::Optimal);
        assert!((res.x[1] - 1.0).abs() < 1e-9);
        assert!((res.x[0] - 0.5).abs() < 1e-9);
        assert!((res.objective + 2.5).abs() < 1e-9);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Chvatal's cycling example: every basis at the origin is degenerate
        // and naive pivoting loops; optimum is -1 at x = (1, 0, 1, 0).
        let res = solve_dense(
            &[
                (&[0.5, -5.5, -2.5, 9.0], 0.0),
                (&[0.5, -1.5, -0.5, 1.0], 0.0),
                (&[1.0, 0.0, 0.0, 0.0], 1.0),
            ],
            &[-1, -1, -1],
            &[-10.0, 57.0, 9.0, 24.0],
            &[0.0; 4],
            &[f64::INFINITY; 4],
        );
        assert_eq!(res.status, SimplexStatus::Optimal);
        assert!((res.objective + 1.0).abs() < 1e-9, "{}", res.objective);
    }

    #[test]
    fn warm_start_reuses_basis() {
        let rows: &[(&[f64], f64)] = &[(&[1.0, 1.0], 4.0), (&[1.0, 0.0], 2.0)];
        let first = solve_dense(
            rows,
            &[-1, -1],
            &[-3.0, -2.0],
            &[0.0, 0.0],
            &[f64::INFINITY, f64::INFINITY],
        );
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); 2];
        for (i, (coeffs, _)) in rows.iter().enumerate() {
            for (j, &v) in coeffs.iter().enumerate() {
                if v != 0.0 {
                    cols[j].push((i, v));
                }
            }
        }
        let mut s = Simplex::new(
            2,
            Rc::new(cols),
            vec![-3.1, -2.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![f64::INFINITY; 4],
            vec![4.0, 2.0],
            1e-9,
        );
        let second = s.solve(Some(&first.basis));
        assert_eq!(second.status, SimplexStatus::Optimal);
        assert!(second.iterations <= first.iterations);
        assert!((second.objective + 10.2).abs() < 1e-9);
    }
}
