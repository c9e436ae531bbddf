//! Branch-and-bound over the bounded simplex.
//!
//! Search order is a depth-first dive with best-bound backtracking: after
//! branching, the child matching the rounded LP value is solved immediately;
//! the sibling goes to a best-bound heap and is revisited when the dive ends.
//! Branching picks the most fractional binary within the highest-priority
//! class, with pseudo-cost tie-breaking. A rounding heuristic at the root
//! (and an optional caller-provided pattern) seeds the incumbent so pruning
//! bites early. Child nodes warm-start from the parent basis.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::Instant;

use super::simplex::{Basis, Simplex, SimplexStatus};
use super::{
    apply_scaling, build_cols, build_simplex, geometric_scaling, MilpInstance, OutcomeStatus,
    SolverError, SolverOptions, SolverOutcome,
};

struct BoundChange {
    parent: Option<Rc<BoundChange>>,
    var: usize,
    lo: f64,
    hi: f64,
}

struct Node {
    chain: Option<Rc<BoundChange>>,
    /// Lower bound inherited from the parent LP.
    bound: f64,
    basis: Option<Rc<Basis>>,
    depth: usize,
    id: u64,
    /// Set when this node is a fresh child: (branch var, went_up, parent
    /// fractional value), used for pseudo-cost updates.
    branched: Option<(usize, bool, f64)>,
}

struct HeapEntry(Node);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.0.bound == other.0.bound && self.0.id == other.0.id
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; order by descending bound then id so the
        // smallest bound pops first, deterministically.
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

struct PseudoCost {
    up_sum: Vec<f64>,
    up_n: Vec<u32>,
    down_sum: Vec<f64>,
    down_n: Vec<u32>,
}

impl PseudoCost {
    fn new(n: usize) -> Self {
        PseudoCost {
            up_sum: vec![0.0; n],
            up_n: vec![0; n],
            down_sum: vec![0.0; n],
            down_n: vec![0; n],
        }
    }

    fn record(&mut self, var: usize, went_up: bool, frac: f64, degradation: f64) {
        let d = degradation.max(0.0);
        if went_up {
            let per = d / (1.0 - frac).max(1e-6);
            self.up_sum[var] += per;
            self.up_n[var] += 1;
        } else {
            let per = d / frac.max(1e-6);
            self.down_sum[var] += per;
            self.down_n[var] += 1;
        }
    }

    fn score(&self, var: usize, frac: f64) -> f64 {
        let up = if self.up_n[var] > 0 {
            self.up_sum[var] / self.up_n[var] as f64
        } else {
            0.0
        };
        let down = if self.down_n[var] > 0 {
            self.down_sum[var] / self.down_n[var] as f64
        } else {
            0.0
        };
        up * (1.0 - frac) + down * frac
    }
}

struct Searcher<'a> {
    instance: &'a MilpInstance,
    scaled: super::LpProblem,
    /// One simplex reused for every node: bound changes leave the basis
    /// factorization valid, so only jumps to stale bases refactorize.
    simplex: Simplex,
    scaling: super::Scaling,
    options: &'a SolverOptions,
    pseudo: PseudoCost,
    incumbent: Option<Incumbent>,
    heap: BinaryHeap<HeapEntry>,
    node_count: usize,
    next_id: u64,
    rounding_tried: bool,
    started: Instant,
    lower_scratch: Vec<f64>,
    upper_scratch: Vec<f64>,
}

struct Incumbent {
    objective: f64,
    values: Vec<f64>,
    duals: Vec<f64>,
}

enum NodeResult {
    Pruned,
    Integral,
    Branched,
    Unbounded,
}

pub fn solve_milp(
    instance: &MilpInstance,
    options: &SolverOptions,
) -> Result<SolverOutcome, SolverError> {
    instance.lp.validate()?;
    let n = instance.lp.num_vars();
    let m = instance.lp.rows.len();
    for j in 0..n {
        if instance.lp.lower[j] > instance.lp.upper[j] {
            return Ok(SolverOutcome::empty(OutcomeStatus::Infeasible, n, m));
        }
    }

    let mut skip = vec![false; n];
    for &j in &instance.binaries {
        skip[j] = true;
        if instance.lp.lower[j] < -1e-12 || instance.lp.upper[j] > 1.0 + 1e-12 {
            return Err(SolverError::BadProblem(format!(
                "binary variable {j} has bounds outside [0, 1]"
            )));
        }
    }
    let scaling = geometric_scaling(&instance.lp, &skip);
    let scaled = apply_scaling(&instance.lp, &scaling);
    let cols = Rc::new(build_cols(&scaled));
    let simplex = build_simplex(&scaled, cols, &scaled.lower, &scaled.upper, options.lp_tol);

    let mut searcher = Searcher {
        instance,
        lower_scratch: scaled.lower.clone(),
        upper_scratch: scaled.upper.clone(),
        scaled,
        simplex,
        scaling,
        options,
        pseudo: PseudoCost::new(n),
        incumbent: None,
        heap: BinaryHeap::new(),
        node_count: 0,
        next_id: 0,
        rounding_tried: false,
        started: Instant::now(),
    };
    searcher.run()
}

impl<'a> Searcher<'a> {
    fn run(&mut self) -> Result<SolverOutcome, SolverError> {
        self.seed_incumbents()?;

        let root = Node {
            chain: None,
            bound: f64::NEG_INFINITY,
            basis: self.options.warm_basis.clone().map(Rc::new),
            depth: 0,
            id: self.fresh_id(),
            branched: None,
        };
        let mut dive: Option<Node> = Some(root);
        let mut limit_hit = false;

        loop {
            let node = match dive.take() {
                Some(n) => n,
                None => match self.heap.pop() {
                    Some(HeapEntry(n)) => n,
                    None => break,
                },
            };

            if self.node_count >= self.options.node_limit || self.time_exceeded() {
                limit_hit = true;
                break;
            }
            if self.cutoff(node.bound) {
                self.record_pseudo(&node, node.bound);
                continue;
            }

            match self.process(node, &mut dive)? {
                NodeResult::Unbounded => {
                    let n = self.instance.lp.num_vars();
                    let m = self.instance.lp.rows.len();
                    return Ok(SolverOutcome {
                        status: OutcomeStatus::Unbounded,
                        values: vec![0.0; n],
                        objective: f64::NEG_INFINITY,
                        bound: f64::NEG_INFINITY,
                        node_count: self.node_count,
                        row_duals: vec![0.0; m],
                    });
                }
                NodeResult::Pruned | NodeResult::Integral | NodeResult::Branched => {}
            }

            // Gap termination: everything still open lies above inc - gap.
            if let Some(inc) = &self.incumbent {
                let open_bound = self.open_bound(&dive);
                if inc.objective - open_bound <= self.gap_abs(inc.objective) {
                    self.heap.clear();
                    break;
                }
            }
        }

        let n = self.instance.lp.num_vars();
        let m = self.instance.lp.rows.len();
        match self.incumbent.take() {
            Some(inc) => {
                let bound = if limit_hit {
                    self.open_bound(&None).min(inc.objective)
                } else {
                    // Exhausted or gap-met: the open bound is the proof.
                    self.open_bound(&None).min(inc.objective)
                };
                let status = if limit_hit
                    && inc.objective - bound > self.gap_abs(inc.objective)
                {
                    OutcomeStatus::FeasibleNonconverged
                } else {
                    OutcomeStatus::Optimal
                };
                Ok(SolverOutcome {
                    status,
                    objective: inc.objective,
                    bound,
                    values: inc.values,
                    row_duals: inc.duals,
                    node_count: self.node_count,
                })
            }
            None if limit_hit => Err(SolverError::LimitWithoutIncumbent),
            None => Ok(SolverOutcome::empty(OutcomeStatus::Infeasible, n, m)),
        }
    }

    fn fresh_id(&mut self) -> u64 {
        self.next_id += 1;
        self.next_id
    }

    fn time_exceeded(&self) -> bool {
        self.options
            .time_limit
            .is_some_and(|lim| self.started.elapsed() > lim)
    }

    fn gap_abs(&self, incumbent: f64) -> f64 {
        self.options.mip_gap * incumbent.abs().max(1.0)
    }

    fn cutoff(&self, bound: f64) -> bool {
        self.incumbent
            .as_ref()
            .is_some_and(|inc| bound >= inc.objective - self.gap_abs(inc.objective))
    }

    fn open_bound(&self, dive: &Option<Node>) -> f64 {
        let heap_bound = self
            .heap
            .iter()
            .map(|e| e.0.bound)
            .fold(f64::INFINITY, f64::min);
        let dive_bound = dive.as_ref().map_or(f64::INFINITY, |n| n.bound);
        heap_bound.min(dive_bound)
    }

    /// Materializes node bounds into the scratch vectors.
    fn apply_chain(&mut self, chain: &Option<Rc<BoundChange>>) {
        self.lower_scratch.copy_from_slice(&self.scaled.lower);
        self.upper_scratch.copy_from_slice(&self.scaled.upper);
        let mut cur = chain.clone();
        while let Some(link) = cur {
            self.lower_scratch[link.var] = link.lo;
            self.upper_scratch[link.var] = link.hi;
            cur = link.parent.clone();
        }
    }

    fn solve_node_lp(
        &mut self,
        chain: &Option<Rc<BoundChange>>,
        warm: Option<&Basis>,
    ) -> (SimplexStatus, Vec<f64>, Vec<f64>, f64, Basis) {
        self.apply_chain(chain);
        self.simplex
            .set_bounds(&self.lower_scratch, &self.upper_scratch);
        let res = self.simplex.solve(warm);
        self.node_count += 1;
        (res.status, res.x, res.duals, res.objective, res.basis)
    }

    fn record_pseudo(&mut self, node: &Node, child_obj: f64) {
        if let Some((var, went_up, frac)) = node.branched {
            let parent = node.bound;
            if parent.is_finite() && child_obj.is_finite() {
                self.pseudo.record(var, went_up, frac, child_obj - parent);
            }
        }
    }

    fn process(&mut self, node: Node, dive: &mut Option<Node>) -> Result<NodeResult, SolverError> {
        let (status, x, duals, objective, basis) =
            self.solve_node_lp(&node.chain, node.basis.as_deref());

        match status {
            SimplexStatus::Infeasible => {
                self.record_pseudo(&node, f64::INFINITY);
                return Ok(NodeResult::Pruned);
            }
            SimplexStatus::Unbounded => return Ok(NodeResult::Unbounded),
            SimplexStatus::IterationLimit | SimplexStatus::Numerical => {
                return Err(SolverError::Numerical(
                    "node relaxation lost stability".into(),
                ))
            }
            SimplexStatus::Optimal => {}
        }
        self.record_pseudo(&node, objective);

        if self.cutoff(objective) {
            return Ok(NodeResult::Pruned);
        }

        match self.pick_branch_var(&x) {
            None => {
                self.accept_incumbent(&x, duals, objective)?;
                Ok(NodeResult::Integral)
            }
            Some((var, frac)) => {
                if !self.rounding_tried {
                    // Rounding heuristic on the first fractional relaxation.
                    self.rounding_tried = true;
                    let rounded: Vec<bool> = self
                        .instance
                        .binaries
                        .iter()
                        .map(|&j| x[j] >= 0.5)
                        .collect();
                    self.try_pattern(&rounded)?;
                }
                let basis = Rc::new(basis);
                let round_up = frac >= 0.5;
                let near = self.child(&node, var, round_up, frac, objective, &basis);
                let far = self.child(&node, var, !round_up, frac, objective, &basis);
                self.heap.push(HeapEntry(far));
                *dive = Some(near);
                Ok(NodeResult::Branched)
            }
        }
    }

    fn child(
        &mut self,
        parent: &Node,
        var: usize,
        up: bool,
        frac: f64,
        parent_obj: f64,
        basis: &Rc<Basis>,
    ) -> Node {
        let (lo, hi) = if up { (1.0, 1.0) } else { (0.0, 0.0) };
        Node {
            chain: Some(Rc::new(BoundChange {
                parent: parent.chain.clone(),
                var,
                lo,
                hi,
            })),
            bound: parent_obj,
            basis: Some(basis.clone()),
            depth: parent.depth + 1,
            id: self.fresh_id(),
            branched: Some((var, up, frac)),
        }
    }

    /// Most fractional binary within the best (lowest) priority class; ties
    /// broken by pseudo-cost score, then index.
    fn pick_branch_var(&self, x: &[f64]) -> Option<(usize, f64)> {
        let tol = self.options.int_tol;
        let mut best: Option<(u8, f64, f64, usize)> = None; // (prio, -dist, -score, var)
        for (k, &j) in self.instance.binaries.iter().enumerate() {
            let v = x[j];
            let dist = (v - v.round()).abs();
            if dist <= tol {
                continue;
            }
            let frac = v.clamp(0.0, 1.0);
            let prio = self.instance.priorities[k];
            let score = self.pseudo.score(j, frac);
            let better = match &best {
                None => true,
                Some((bp, bd, bs, bj)) => {
                    prio < *bp
                        || (prio == *bp
                            && (dist > *bd + 1e-3
                                || ((dist - *bd).abs() <= 1e-3
                                    && (score > *bs + 1e-12
                                        || ((score - *bs).abs() <= 1e-12 && j < *bj)))))
                }
            };
            if better {
                best = Some((prio, dist, score, j));
            }
        }
        best.map(|(_, _, _, j)| {
            let v = x[j].clamp(0.0, 1.0);
            (j, v)
        })
    }

    fn accept_incumbent(
        &mut self,
        x_scaled: &[f64],
        duals_scaled: Vec<f64>,
        objective: f64,
    ) -> Result<(), SolverError> {
        let n = self.instance.lp.num_vars();
        let mut x = vec![0.0; n];
        for j in 0..n {
            x[j] = x_scaled[j] * self.scaling.col[j];
        }
        let viol = self.instance.lp.max_violation(&x);
        if viol > 1e-7 {
            return Err(SolverError::Numerical(format!(
                "incumbent violates rows by {viol:.3e}"
            )));
        }
        let mut duals = duals_scaled;
        for (i, d) in duals.iter_mut().enumerate() {
            *d *= self.scaling.row[i];
        }
        // Scaling preserves objective values; recompute on the original data
        // so the reported number is exactly consistent with `values`.
        let _ = objective;
        let objective = self.instance.lp.objective_value(&x);
        if self
            .incumbent
            .as_ref()
            .is_none_or(|inc| objective < inc.objective)
        {
            self.incumbent = Some(Incumbent {
                objective,
                values: x,
                duals,
            });
        }
        Ok(())
    }

    /// Incumbent seeding from a caller-provided pattern; the rounding
    /// heuristic runs later, on the first fractional relaxation.
    fn seed_incumbents(&mut self) -> Result<(), SolverError> {
        if let Some(pattern) = self.options.incumbent_seed.clone() {
            if pattern.len() == self.instance.binaries.len() {
                self.try_pattern(&pattern)?;
            }
        }
        Ok(())
    }

    fn try_pattern(&mut self, pattern: &[bool]) -> Result<(), SolverError> {
        // Pattern must respect pre-fixed binaries.
        for (k, &j) in self.instance.binaries.iter().enumerate() {
            let (lo, hi) = (self.instance.lp.lower[j], self.instance.lp.upper[j]);
            let v = if pattern[k] { 1.0 } else { 0.0 };
            if v < lo - 1e-9 || v > hi + 1e-9 {
                return Ok(());
            }
        }
        let mut chain: Option<Rc<BoundChange>> = None;
        for (k, &j) in self.instance.binaries.iter().enumerate() {
            let v = if pattern[k] { 1.0 } else { 0.0 };
            chain = Some(Rc::new(BoundChange {
                parent: chain,
                var: j,
                lo: v,
                hi: v,
            }));
        }
        let (status, x, duals, objective, _basis) = self.solve_node_lp(&chain, None);
        if status == SimplexStatus::Optimal {
            self.accept_incumbent(&x, duals, objective)?;
        }
        Ok(())
    }
}
