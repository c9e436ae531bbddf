//! Linearized branch-flow expressions and the successive-linearization
//! driver.
//!
//! Around the flat operating point V = 1.0 + dV, theta = 0 + dth, the active
//! flow on a directed branch m->n is
//!
//! ```text
//! PL = g (dV_m - dV_n) - b (dth_m - dth_n) (1 - w) + g dV_m (dV_m - dV_n)
//! ```
//!
//! with w = 1 for DC branches. The third term carries the branch losses and
//! is bilinear in the decision variables, so it is linearized by freezing the
//! standalone dV_m factor at a point estimate dV̂_m. The reactive counterpart
//! is
//!
//! ```text
//! QL = [ -b (dV_m - dV_n) - g (dth_m - dth_n) - b dV̂_m (dV_m - dV_n) ] (1 - w)
//! ```
//!
//! which vanishes identically on DC branches. Re-solving with dV̂ updated from
//! the previous solution (successive linearization) removes the freezing
//! error at the fixed point; [`successive_linearization`] drives that loop
//! and guards against binary-pattern oscillation.

use thiserror::Error;

use crate::network::NormLine;

#[derive(Debug, Error)]
pub enum PowerflowError {
    #[error("linearization point covers {got} buses, bus index {want} requested")]
    MissingPointEntry { want: usize, got: usize },
}

/// Driver failure: bad parameters or an error from the model factory.
#[derive(Debug, Error)]
pub enum SuccessiveError<E> {
    #[error("tolerance must be positive (got {0})")]
    BadTolerance(f64),
    #[error("max_iter must be at least 1")]
    BadMaxIter,
    #[error(transparent)]
    Factory(E),
}

/// Affine form in the endpoint states of one directed branch-hour:
/// `coef_dv_m * dV_m + coef_dv_n * dV_n + coef_dth_m * dth_m +
/// coef_dth_n * dth_n + constant`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowExpr {
    pub coef_dv_m: f64,
    pub coef_dv_n: f64,
    pub coef_dth_m: f64,
    pub coef_dth_n: f64,
    pub constant: f64,
}

impl FlowExpr {
    pub const ZERO: FlowExpr = FlowExpr {
        coef_dv_m: 0.0,
        coef_dv_n: 0.0,
        coef_dth_m: 0.0,
        coef_dth_n: 0.0,
        constant: 0.0,
    };

    pub fn eval(&self, dv_m: f64, dv_n: f64, dth_m: f64, dth_n: f64) -> f64 {
        self.coef_dv_m * dv_m
            + self.coef_dv_n * dv_n
            + self.coef_dth_m * dth_m
            + self.coef_dth_n * dth_n
            + self.constant
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }
}

/// Per-bus, per-hour voltage-deviation estimates used to freeze the bilinear
/// loss term. Stored hour-major: `dv_hat[t][bus]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationPoint {
    dv_hat: Vec<Vec<f64>>,
}

impl LinearizationPoint {
    /// Flat start: dV̂ = 0 everywhere, which zeroes the loss term.
    pub fn flat(n_buses: usize, horizon: usize) -> Self {
        LinearizationPoint {
            dv_hat: vec![vec![0.0; n_buses]; horizon],
        }
    }

    pub fn from_rows(dv_hat: Vec<Vec<f64>>) -> Self {
        LinearizationPoint { dv_hat }
    }

    pub fn horizon(&self) -> usize {
        self.dv_hat.len()
    }

    pub fn n_buses(&self) -> usize {
        self.dv_hat.first().map_or(0, Vec::len)
    }

    pub fn get(&self, bus: usize, hour: usize) -> Result<f64, PowerflowError> {
        self.dv_hat
            .get(hour)
            .and_then(|row| row.get(bus))
            .copied()
            .ok_or(PowerflowError::MissingPointEntry {
                want: bus,
                got: self.n_buses(),
            })
    }

    /// Largest entry-wise distance to another point over all buses and hours.
    pub fn max_distance(&self, other: &LinearizationPoint) -> f64 {
        self.dv_hat
            .iter()
            .zip(&other.dv_hat)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Active-power flow expression for the directed branch m->n at one hour.
pub fn active_flow_expr(
    line: &NormLine,
    point: &LinearizationPoint,
    hour: usize,
    reversed: bool,
) -> Result<FlowExpr, PowerflowError> {
    let m = if reversed { line.to } else { line.from };
    let dv_hat_m = point.get(m, hour)?;
    let w = if line.kind == crate::network::BusKind::DC {
        1.0
    } else {
        0.0
    };
    let gv = line.g * (1.0 + dv_hat_m);
    Ok(FlowExpr {
        coef_dv_m: gv,
        coef_dv_n: -gv,
        coef_dth_m: -line.b * (1.0 - w),
        coef_dth_n: line.b * (1.0 - w),
        constant: 0.0,
    })
}

/// Reactive-power flow expression for the directed branch m->n at one hour.
/// Identically zero for DC branches.
pub fn reactive_flow_expr(
    line: &NormLine,
    point: &LinearizationPoint,
    hour: usize,
    reversed: bool,
) -> Result<FlowExpr, PowerflowError> {
    if line.kind == crate::network::BusKind::DC {
        return Ok(FlowExpr::ZERO);
    }
    let m = if reversed { line.to } else { line.from };
    let dv_hat_m = point.get(m, hour)?;
    let bv = line.b * (1.0 + dv_hat_m);
    Ok(FlowExpr {
        coef_dv_m: -bv,
        coef_dv_n: bv,
        coef_dth_m: -line.g,
        coef_dth_n: line.g,
        constant: 0.0,
    })
}

/// Branch loss at a converged point: g (dV_m - dV_n)^2 in per-unit. Equals
/// PL_mn + PL_nm when the linearization point matches the solution.
pub fn pair_loss(line: &NormLine, dv_m: f64, dv_n: f64) -> f64 {
    let d = dv_m - dv_n;
    line.g * d * d
}

// ---------------------------------------------------------------------------
// Successive linearization
// ---------------------------------------------------------------------------

/// One row of the iteration trace: objective, largest voltage-point movement
/// since the previous iterate, and a hash of the binary pattern.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub max_dv_change: f64,
    pub binary_hash: u64,
}

#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    /// Set when the oscillation guard froze the binary pattern.
    pub guard_engaged: bool,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// `iteration,objective,max_dv_change` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective,max_dv_change\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{}\n",
                r.iteration, r.objective, r.max_dv_change
            ));
        }
        out
    }
}

/// What one model build + solve must hand back to the driver.
pub struct Iterate<S> {
    pub solution: S,
    /// Solved voltage deviations, hour-major like the point.
    pub dv: Vec<Vec<f64>>,
    pub objective: f64,
    /// Values of the model's binary variables, in model order.
    pub binaries: Vec<bool>,
}

/// FNV-1a over the packed binary pattern; stable across runs.
pub fn binary_pattern_hash(binaries: &[bool]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for chunk in binaries.chunks(8) {
        let mut byte = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            if b {
                byte |= 1 << i;
            }
        }
        h ^= byte as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub struct SuccessiveOutcome<S> {
    pub solution: S,
    pub trace: IterationTrace,
    pub point: LinearizationPoint,
}

/// Drives the loss-term fixed-point loop. Iteration 0 solves at the flat
/// point (no losses); iteration k rebuilds with dV̂ taken from iteration k-1
/// and re-solves. Stops once max |dV^k - dV^{k-1}| < `tol`.
///
/// If the binary pattern revisits a previously seen pattern while the
/// voltages are still moving, the pattern is oscillating between near-tied
/// schedules; the guard then freezes the repeated pattern and continues with
/// continuous-only iterations, which guarantees the loop cannot cycle.
///
/// The factory is called as `factory(point, fixed_binaries)`; it must honor
/// `Some(pattern)` by pinning every binary to the given value.
pub fn successive_linearization<S, E, F>(
    n_buses: usize,
    horizon: usize,
    tol: f64,
    max_iter: usize,
    mut factory: F,
) -> Result<SuccessiveOutcome<S>, SuccessiveError<E>>
where
    F: FnMut(&LinearizationPoint, Option<&[bool]>) -> Result<Iterate<S>, E>,
{
    if !(tol > 0.0) {
        return Err(SuccessiveError::BadTolerance(tol));
    }
    if max_iter == 0 {
        return Err(SuccessiveError::BadMaxIter);
    }

    let mut point = LinearizationPoint::flat(n_buses, horizon);
    let mut trace = IterationTrace::default();
    let mut seen_patterns: Vec<u64> = Vec::new();
    let mut fixed_pattern: Option<Vec<bool>> = None;
    let mut last: Option<SuccessiveOutcome<S>> = None;

    for iteration in 0..max_iter {
        let iterate =
            factory(&point, fixed_pattern.as_deref()).map_err(SuccessiveError::Factory)?;
        let new_point = LinearizationPoint::from_rows(iterate.dv);
        let max_change = new_point.max_distance(&point);
        let hash = binary_pattern_hash(&iterate.binaries);
        trace.records.push(IterationRecord {
            iteration,
            objective: iterate.objective,
            max_dv_change: max_change,
            binary_hash: hash,
        });



        let converged = max_change < tol;
        last = Some(SuccessiveOutcome {
            solution: iterate.solution,
            trace: IterationTrace::default(), // replaced below
            point: new_point.clone(),
        });

        if converged {
            trace.converged = true;
            break;
        }

        if fixed_pattern.is_some() {
            // Stay frozen on whatever the factory actually used: if the
            // frozen pattern went infeasible under the moved coefficients,
            // the factory is allowed to re-solve freely, and the fresh
            // pattern becomes the frozen one.
            fixed_pattern = Some(iterate.binaries.clone());
        } else if seen_patterns.contains(&hash) {
            // The pattern is revisiting itself: freeze it where it stands.
            // The current pattern is the repeated one and is known feasible
            // at the current point; importing an older pattern could be
            // infeasible under the moved coefficients.
            trace.guard_engaged = true;
            fixed_pattern = Some(iterate.binaries.clone());
        } else {
            seen_patterns.push(hash);
        }

        point = new_point;
    }

    let mut outcome = last.expect("max_iter >= 1 guarantees one iterate");
    outcome.trace = trace;
    Ok(outcome)
}
