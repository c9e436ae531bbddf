//! Day-ahead MILP assembly: decision variables, network and device
//! constraints, and the operation-cost objective, built from a normalized
//! network, hourly profiles, and a loss linearization point.
//!
//! Hourly structure per entity:
//! - directed branch flows PL (and QL on AC) bound to the linearized flow
//!   expressions, with capacity as variable bounds;
//! - converter blocks: rectified and inverted flow split by a direction
//!   binary, AC-side reactive support;
//! - nodal active balance on every bus, reactive balance on AC buses;
//! - dispatchable units: capacity-with-commitment, startup/shutdown logic,
//!   minimum up/down windows, ramps with startup/shutdown allowances;
//! - storage: charge/discharge split with exclusivity, energy recursion with
//!   discharge efficiency, depth-of-discharge floor;
//! - utility exchange bounded per connection point.
//!
//! Startup/shutdown indicators are continuous in [0, 1]: the logic rows plus
//! four forcing rows pin them to the commitment pattern exactly, which keeps
//! the binary count at commitment + storage states + converter direction.

use std::fmt::Write as _;

use thiserror::Error;

use crate::network::{BusKind, NormalizedNetwork};
use crate::powerflow::{
    active_flow_expr, pair_loss, reactive_flow_expr, LinearizationPoint, PowerflowError,
};
use crate::profiles::ProfileSet;
use crate::solver::{OutcomeStatus, Sense, SolverOutcome};

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("profiles horizon {got} does not match expected {want}")]
    HorizonMismatch { want: usize, got: usize },
    #[error("missing profile entry: {0}")]
    MissingProfile(String),
    #[error("flow expression: {0}")]
    Expression(#[from] PowerflowError),
    #[error("solution has non-integral binary `{name}` = {value}")]
    IntegralityViolation { name: String, value: f64 },
    #[error("solver objective {solver} disagrees with recomputation {recomputed}")]
    ObjectiveMismatch { solver: f64, recomputed: f64 },
    #[error("cannot extract a solution from an {0:?} outcome")]
    NotSolved(OutcomeStatus),
}

// ---------------------------------------------------------------------------
// Model containers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone)]
pub struct VarDef {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    /// Branch order class: commitment (0) before storage states (1) before
    /// converter direction (2).
    pub branch_priority: u8,
}

#[derive(Debug, Clone)]
pub struct RowDef {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Sparse MILP with named variables and rows plus typed index maps back to
/// the network entities.
#[derive(Debug, Clone)]
pub struct MilpModel {
    vars: Vec<VarDef>,
    rows: Vec<RowDef>,
    objective: Vec<(VarId, f64)>,
    pub index: ModelIndex,
}

impl MilpModel {
    pub fn vars(&self) -> &[VarDef] {
        &self.vars
    }

    pub fn rows(&self) -> &[RowDef] {
        &self.rows
    }

    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Binary variables in creation order.
    pub fn binary_vars(&self) -> Vec<VarId> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| VarId(i))
            .collect()
    }

    /// Values of the binaries (creation order) rounded to bool.
    pub fn binary_pattern(&self, values: &[f64]) -> Vec<bool> {
        self.binary_vars()
            .iter()
            .map(|v| values[v.index()] >= 0.5)
            .collect()
    }

    fn add_var(&mut self, name: String, kind: VarKind, lb: f64, ub: f64, priority: u8) -> VarId {
        debug_assert!(
            kind == VarKind::Continuous || (lb >= 0.0 && ub <= 1.0),
            "binary bounds must lie in [0, 1]"
        );
        let id = VarId(self.vars.len());
        self.vars.push(VarDef {
            name,
            kind,
            lb,
            ub,
            branch_priority: priority,
        });
        id
    }

    fn add_row(&mut self, name: String, coeffs: Vec<(VarId, f64)>, sense: Sense, rhs: f64) {
        debug_assert!(coeffs.iter().all(|(v, _)| v.index() < self.vars.len()));
        self.rows.push(RowDef {
            name,
            coeffs,
            sense,
            rhs,
        });
    }
}

/// Typed handles from (entity, hour) to variables. Hour-major inner vectors.
#[derive(Debug, Clone, Default)]
pub struct ModelIndex {
    pub horizon: usize,
    /// [bus][t]
    pub dv: Vec<Vec<VarId>>,
    /// [bus][t], AC buses only
    pub dth: Vec<Option<Vec<VarId>>>,
    /// [line][direction 0=fwd,1=rev][t]; None for open lines
    pub pl: Vec<Option<[Vec<VarId>; 2]>>,
    /// [line][direction][t]; None for open or DC lines
    pub ql: Vec<Option<[Vec<VarId>; 2]>>,
    /// [gen][t]
    pub gen_p: Vec<Vec<VarId>>,
    /// [gen][t], dispatchable on an AC bus
    pub gen_q: Vec<Option<Vec<VarId>>>,
    /// [gen][t], dispatchable only
    pub gen_i: Vec<Option<Vec<VarId>>>,
    pub gen_y: Vec<Option<Vec<VarId>>>,
    pub gen_z: Vec<Option<Vec<VarId>>>,
    /// [storage][t]
    pub sto_pb: Vec<Vec<VarId>>,
    pub sto_ch: Vec<Vec<VarId>>,
    pub sto_dch: Vec<Vec<VarId>>,
    pub sto_e: Vec<Vec<VarId>>,
    pub sto_u: Vec<Vec<VarId>>,
    pub sto_v: Vec<Vec<VarId>>,
    /// [converter][t]
    pub conv_rect: Vec<Vec<VarId>>,
    pub conv_inv: Vec<Vec<VarId>>,
    pub conv_d: Vec<Vec<VarId>>,
    pub conv_qc: Vec<Vec<VarId>>,
    /// Utility exchange per pcc bus: (bus index, [t])
    pub pm: Vec<(usize, Vec<VarId>)>,
    /// Reactive exchange, AC pcc buses only
    pub qm: Vec<(usize, Vec<VarId>)>,
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Reactive exchange bound at the AC pcc (kW-scale, i.e. kVAr); defaults
    /// to the active tie capacity.
    pub qm_max: Option<f64>,
    /// Require the final stored energy to be at least the initial one.
    pub require_terminal_energy: bool,
    /// Trust radius around the linearization point: voltage deviations are
    /// additionally bounded to [dV̂ - r, dV̂ + r]. The frozen loss factor
    /// makes apparent losses linear in dV, so without this cap a solve can
    /// harvest fictitious negative losses by swinging dV against dV̂ along
    /// degenerate directions; the successive loop shrinks r to squeeze that
    /// channel shut.
    pub trust_radius: Option<f64>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            qm_max: None,
            require_terminal_energy: false,
            trust_radius: None,
        }
    }
}

fn ident(raw: &str) -> String {
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

// ---------------------------------------------------------------------------
// Model building
// ---------------------------------------------------------------------------

/// Assembles the full day-ahead MILP for the given linearization point.
pub fn build_model(
    norm: &NormalizedNetwork,
    profiles: &ProfileSet,
    point: &LinearizationPoint,
    opts: &BuildOptions,
) -> Result<MilpModel, SchedulerError> {
    let horizon = profiles.horizon;
    if point.horizon() != horizon || point.n_buses() != norm.buses.len() {
        return Err(SchedulerError::HorizonMismatch {
            want: horizon,
            got: point.horizon(),
        });
    }
    if profiles.price.len() != horizon {
        return Err(SchedulerError::MissingProfile("price".into()));
    }

    let mut model = MilpModel {
        vars: Vec::new(),
        rows: Vec::new(),
        objective: Vec::new(),
        index: ModelIndex {
            horizon,
            ..Default::default()
        },
    };

    register_bus_vars(&mut model, norm, point, opts.trust_radius, horizon);
    register_line_vars(&mut model, norm, horizon);
    register_generator_vars(&mut model, norm, profiles, horizon)?;
    register_storage_vars(&mut model, norm, horizon);
    register_converter_vars(&mut model, norm, horizon);
    register_exchange_vars(&mut model, norm, profiles, opts, horizon);

    add_flow_definitions(&mut model, norm, point, horizon)?;
    add_converter_blocks(&mut model, norm, horizon);
    for t in 0..horizon {
        for (b, _) in norm.buses.iter().enumerate() {
            add_nodal_balance(&mut model, norm, profiles, b, t);
        }
    }
    for g in 0..norm.generators.len() {
        add_uc_constraints(&mut model, norm, g);
    }
    for s in 0..norm.storages.len() {
        add_storage_constraints(&mut model, norm, s, opts);
    }

    // Objective: dispatchable generation cost plus exchange cost, $ per hour
    // slice; per-unit power turns back into kW through s_base.
    let mut obj = Vec::new();
    for (g, gen) in norm.generators.iter().enumerate() {
        if gen.dispatchable && gen.cost != 0.0 {
            for t in 0..horizon {
                obj.push((model.index.gen_p[g][t], gen.cost * norm.s_base));
            }
        }
    }
    for (_, pm_vars) in &model.index.pm {
        for (t, &v) in pm_vars.iter().enumerate() {
            obj.push((v, profiles.price[t] * norm.s_base));
        }
    }
    model.objective = obj;

    Ok(model)
}

fn register_bus_vars(
    model: &mut MilpModel,
    norm: &NormalizedNetwork,
    point: &LinearizationPoint,
    trust_radius: Option<f64>,
    horizon: usize,
) {
    let is_reference: Vec<bool> = (0..norm.buses.len())
        .map(|b| norm.references.contains(&b))
        .collect();
    for (b, bus) in norm.buses.iter().enumerate() {
        let name = ident(&bus.id);
        let mut dv_t = Vec::with_capacity(horizon);
        let mut dth_t = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let (lb, ub) = if is_reference[b] {
                (0.0, 0.0)
            } else {
                match trust_radius {
                    None => (bus.dv_min, bus.dv_max),
                    Some(r) => {
                        let center = point.get(b, t).unwrap_or(0.0);
                        let lo = (center - r).max(bus.dv_min);
                        let hi = (center + r).min(bus.dv_max);
                        (lo.min(hi), hi.max(lo))
                    }
                }
            };
            dv_t.push(model.add_var(
                format!("DV_{name}_t{t:02}"),
                VarKind::Continuous,
                lb,
                ub,
                0,
            ));
            if bus.kind == BusKind::AC {
                let (lb, ub) = if is_reference[b] {
                    (0.0, 0.0)
                } else {
                    (f64::NEG_INFINITY, f64::INFINITY)
                };
                dth_t.push(model.add_var(
                    format!("DTH_{name}_t{t:02}"),
                    VarKind::Continuous,
                    lb,
                    ub,
                    0,
                ));
            }
        }
        model.index.dv.push(dv_t);
        model
            .index
            .dth
            .push((bus.kind == BusKind::AC).then_some(dth_t));
    }
}

fn register_line_vars(model: &mut MilpModel, norm: &NormalizedNetwork, horizon: usize) {
    for line in &norm.lines {
        if line.open {
            model.index.pl.push(None);
            model.index.ql.push(None);
            continue;
        }
        let name = ident(&line.id);
        let mut pl = [Vec::new(), Vec::new()];
        let mut ql = [Vec::new(), Vec::new()];
        for (d, tag) in ["f", "r"].iter().enumerate() {
            for t in 0..horizon {
                pl[d].push(model.add_var(
                    format!("PL_{name}_{tag}_t{t:02}"),
                    VarKind::Continuous,
                    -line.pl_max,
                    line.pl_max,
                    0,
                ));
                if line.kind == BusKind::AC {
                    ql[d].push(model.add_var(
                        format!("QL_{name}_{tag}_t{t:02}"),
                        VarKind::Continuous,
                        -line.ql_max,
                        line.ql_max,
                        0,
                    ));
                }
            }
        }
        model.index.pl.push(Some(pl));
        model
            .index
            .ql
            .push((line.kind == BusKind::AC).then_some(ql));
    }
}

fn register_generator_vars(
    model: &mut MilpModel,
    norm: &NormalizedNetwork,
    profiles: &ProfileSet,
    horizon: usize,
) -> Result<(), SchedulerError> {
    for gen in &norm.generators {
        let name = ident(&gen.id);
        if gen.dispatchable {
            let on_ac = norm.buses[gen.bus].kind == BusKind::AC;
            let mut p = Vec::new();
            let mut q = Vec::new();
            let mut i_ = Vec::new();
            let mut y = Vec::new();
            let mut z = Vec::new();
            // Residual minimum-up/down obligations from the initial state.
            let forced_on = if gen.initially_on() && gen.init_on_hours < gen.ut {
                (gen.ut - gen.init_on_hours) as usize
            } else {
                0
            };
            let forced_off = if !gen.initially_on() && gen.init_off_hours < gen.dt {
                (gen.dt - gen.init_off_hours) as usize
            } else {
                0
            };
            for t in 0..horizon {
                p.push(model.add_var(
                    format!("P_{name}_t{t:02}"),
                    VarKind::Continuous,
                    0.0,
                    gen.p_max,
                    0,
                ));
                if on_ac {
                    q.push(model.add_var(
                        format!("Q_{name}_t{t:02}"),
                        VarKind::Continuous,
                        gen.q_min.min(0.0),
                        gen.q_max.max(0.0),
                        0,
                    ));
                }
                let (mut ilb, mut iub) = (0.0, 1.0);
                if t < forced_on {
                    ilb = 1.0;
                }
                if t < forced_off {
                    iub = 0.0;
                }
                i_.push(model.add_var(format!("I_{name}_t{t:02}"), VarKind::Binary, ilb, iub, 0));
                y.push(model.add_var(
                    format!("Y_{name}_t{t:02}"),
                    VarKind::Continuous,
                    0.0,
                    1.0,
                    0,
                ));
                z.push(model.add_var(
                    format!("Z_{name}_t{t:02}"),
                    VarKind::Continuous,
                    0.0,
                    1.0,
                    0,
                ));
            }
            model.index.gen_p.push(p);
            model.index.gen_q.push(on_ac.then_some(q));
            model.index.gen_i.push(Some(i_));
            model.index.gen_y.push(Some(y));
            model.index.gen_z.push(Some(z));
        } else {
            let avail = profiles
                .availability
                .get(&gen.id)
                .ok_or_else(|| SchedulerError::MissingProfile(format!("availability[{}]", gen.id)))?;
            let mut p = Vec::new();
            for (t, &a) in avail.iter().enumerate().take(horizon) {
                // Curtailment allowed: output may fall anywhere below the
                // available fraction of capacity.
                p.push(model.add_var(
                    format!("P_{name}_t{t:02}"),
                    VarKind::Continuous,
                    0.0,
                    a * gen.p_max,
                    0,
                ));
            }
            model.index.gen_p.push(p);
            model.index.gen_q.push(None);
            model.index.gen_i.push(None);
            model.index.gen_y.push(None);
            model.index.gen_z.push(None);
        }
    }
    Ok(())
}

fn register_storage_vars(model: &mut MilpModel, norm: &NormalizedNetwork, horizon: usize) {
    for sto in &norm.storages {
        let name = ident(&sto.id);
        let (mut pb, mut ch, mut dch, mut e, mut u, mut v) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for t in 0..horizon {
            pb.push(model.add_var(
                format!("PB_{name}_t{t:02}"),
                VarKind::Continuous,
                -sto.p_rating,
                sto.p_rating,
                0,
            ));
            ch.push(model.add_var(
                format!("PCH_{name}_t{t:02}"),
                VarKind::Continuous,
                -sto.p_rating,
                0.0,
                0,
            ));
            dch.push(model.add_var(
                format!("PDCH_{name}_t{t:02}"),
                VarKind::Continuous,
                0.0,
                sto.p_rating,
                0,
            ));
            e.push(model.add_var(
                format!("E_{name}_t{t:02}"),
                VarKind::Continuous,
                sto.e_floor,
                sto.e_max,
                0,
            ));
            u.push(model.add_var(format!("U_{name}_t{t:02}"), VarKind::Binary, 0.0, 1.0, 1));
            v.push(model.add_var(format!("V_{name}_t{t:02}"), VarKind::Binary, 0.0, 1.0, 1));
        }
        model.index.sto_pb.push(pb);
        model.index.sto_ch.push(ch);
        model.index.sto_dch.push(dch);
        model.index.sto_e.push(e);
        model.index.sto_u.push(u);
        model.index.sto_v.push(v);
    }
}

fn register_converter_vars(model: &mut MilpModel, norm: &NormalizedNetwork, horizon: usize) {
    for conv in &norm.converters {
        let name = ident(&conv.id);
        let (mut rect, mut inv, mut d, mut qc) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for t in 0..horizon {
            rect.push(model.add_var(
                format!("PCR_{name}_t{t:02}"),
                VarKind::Continuous,
                0.0,
                conv.pc_max,
                0,
            ));
            inv.push(model.add_var(
                format!("PCI_{name}_t{t:02}"),
                VarKind::Continuous,
                0.0,
                conv.pc_max,
                0,
            ));
            d.push(model.add_var(format!("D_{name}_t{t:02}"), VarKind::Binary, 0.0, 1.0, 2));
            qc.push(model.add_var(
                format!("QC_{name}_t{t:02}"),
                VarKind::Continuous,
                -conv.qc_max,
                conv.qc_max,
                0,
            ));
        }
        model.index.conv_rect.push(rect);
        model.index.conv_inv.push(inv);
        model.index.conv_d.push(d);
        model.index.conv_qc.push(qc);
    }
}

fn register_exchange_vars(
    model: &mut MilpModel,
    norm: &NormalizedNetwork,
    profiles: &ProfileSet,
    opts: &BuildOptions,
    horizon: usize,
) {
    let pm_max = profiles.pm_max / norm.s_base;
    let qm_max = opts.qm_max.map_or(pm_max, |q| q / norm.s_base);
    for (b, bus) in norm.buses.iter().enumerate() {
        if !bus.pcc {
            continue;
        }
        let name = ident(&bus.id);
        let pm: Vec<VarId> = (0..horizon)
            .map(|t| {
                model.add_var(
                    format!("PM_{name}_t{t:02}"),
                    VarKind::Continuous,
                    -pm_max,
                    pm_max,
                    0,
                )
            })
            .collect();
        model.index.pm.push((b, pm));
        if bus.kind == BusKind::AC {
            let qm: Vec<VarId> = (0..horizon)
                .map(|t| {
                    model.add_var(
                        format!("QM_{name}_t{t:02}"),
                        VarKind::Continuous,
                        -qm_max,
                        qm_max,
                        0,
                    )
                })
                .collect();
            model.index.qm.push((b, qm));
        }
    }
}

/// Equality rows binding each directed flow variable to its linearized
/// expression at the current point.
fn add_flow_definitions(
    model: &mut MilpModel,
    norm: &NormalizedNetwork,
    point: &LinearizationPoint,
    horizon: usize,
) -> Result<(), SchedulerError> {
    for (l, line) in norm.lines.iter().enumerate() {
        if line.open {
            continue;
        }
        let lname = ident(&line.id);
        for (dir, reversed) in [(0usize, false), (1usize, true)] {
            let (m, n) = if reversed {
                (line.to, line.from)
            } else {
                (line.from, line.to)
            };
            for t in 0..horizon {
                let expr = active_flow_expr(line, point, t, reversed)?;
                let pl = model.index.pl[l].as_ref().expect("closed line")[dir][t];
                let mut coeffs = vec![(pl, 1.0)];
                push_expr_coeffs(model, &mut coeffs, m, n, t, -expr.coef_dv_m, -expr.coef_dv_n,
                    -expr.coef_dth_m, -expr.coef_dth_n);
                model.add_row(
                    format!("flow_p_{lname}_{}_t{t:02}", ["f", "r"][dir]),
                    coeffs,
                    Sense::Eq,
                    expr.constant,
                );

                if line.kind == BusKind::AC {
                    let expr = reactive_flow_expr(line, point, t, reversed)?;
                    let ql = model.index.ql[l].as_ref().expect("AC line")[dir][t];
                    let mut coeffs = vec![(ql, 1.0)];
                    push_expr_coeffs(model, &mut coeffs, m, n, t, -expr.coef_dv_m,
                        -expr.coef_dv_n, -expr.coef_dth_m, -expr.coef_dth_n);
                    model.add_row(
                        format!("flow_q_{lname}_{}_t{t:02}", ["f", "r"][dir]),
                        coeffs,
                        Sense::Eq,
                        expr.constant,
                    );
                }
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn push_expr_coeffs(
    model: &MilpModel,
    coeffs: &mut Vec<(VarId, f64)>,
    m: usize,
    n: usize,
    t: usize,
    dv_m: f64,
    dv_n: f64,
    dth_m: f64,
    dth_n: f64,
) {
    if dv_m != 0.0 {
        coeffs.push((model.index.dv[m][t], dv_m));
    }
    if dv_n != 0.0 {
        coeffs.push((model.index.dv[n][t], dv_n));
    }
    if dth_m != 0.0 {
        if let Some(dth) = &model.index.dth[m] {
            coeffs.push((dth[t], dth_m));
        }
    }
    if dth_n != 0.0 {
        if let Some(dth) = &model.index.dth[n] {
            coeffs.push((dth[t], dth_n));
        }
    }
}

/// Direction split per converter-hour: rectified flow only when d = 1,
/// inverted only when d = 0; both efficiencies below one make simultaneous
/// flow a fictitious loss channel otherwise.
fn add_converter_blocks(model: &mut MilpModel, norm: &NormalizedNetwork, horizon: usize) {
    for (c, conv) in norm.converters.iter().enumerate() {
        let name = ident(&conv.id);
        for t in 0..horizon {
            let rect = model.index.conv_rect[c][t];
            let inv = model.index.conv_inv[c][t];
            let d = model.index.conv_d[c][t];
            model.add_row(
                format!("conv_rect_{name}_t{t:02}"),
                vec![(rect, 1.0), (d, -conv.pc_max)],
                Sense::Le,
                0.0,
            );
            model.add_row(
                format!("conv_inv_{name}_t{t:02}"),
                vec![(inv, 1.0), (d, conv.pc_max)],
                Sense::Le,
                conv.pc_max,
            );
        }
    }
}

/// Active balance on every bus; reactive balance on AC buses. Flows count as
/// outflows toward each neighbor, converters inject on their receiving side
/// scaled by efficiency, and utility exchange enters at connection points.
fn add_nodal_balance(
    model: &mut MilpModel,
    norm: &NormalizedNetwork,
    profiles: &ProfileSet,
    bus: usize,
    t: usize,
) {
    let b = &norm.buses[bus];
    let name = ident(&b.id);
    let mut p_coeffs: Vec<(VarId, f64)> = Vec::new();
    let mut q_coeffs: Vec<(VarId, f64)> = Vec::new();

    for (g, gen) in norm.generators.iter().enumerate() {
        if gen.bus == bus {
            p_coeffs.push((model.index.gen_p[g][t], 1.0));
            if let Some(q) = &model.index.gen_q[g] {
                q_coeffs.push((q[t], 1.0));
            }
        }
    }
    for (s, sto) in norm.storages.iter().enumerate() {
        if sto.bus == bus {
            p_coeffs.push((model.index.sto_pb[s][t], 1.0));
        }
    }
    for (l, line) in norm.lines.iter().enumerate() {
        if line.open {
            continue;
        }
        let pl = model.index.pl[l].as_ref().expect("closed line");
        if line.from == bus {
            p_coeffs.push((pl[0][t], -1.0));
        } else if line.to == bus {
            p_coeffs.push((pl[1][t], -1.0));
        }
        if line.kind == BusKind::AC {
            let ql = model.index.ql[l].as_ref().expect("AC line");
            if line.from == bus {
                q_coeffs.push((ql[0][t], -1.0));
            } else if line.to == bus {
                q_coeffs.push((ql[1][t], -1.0));
            }
        }
    }
    for (c, conv) in norm.converters.iter().enumerate() {
        if conv.ac_bus == bus {
            p_coeffs.push((model.index.conv_rect[c][t], -1.0));
            p_coeffs.push((model.index.conv_inv[c][t], conv.eta_inv));
            q_coeffs.push((model.index.conv_qc[c][t], 1.0));
        }
        if conv.dc_bus == bus {
            p_coeffs.push((model.index.conv_rect[c][t], conv.eta_rect));
            p_coeffs.push((model.index.conv_inv[c][t], -1.0));
        }
    }
    for (pcc_bus, pm) in &model.index.pm {
        if *pcc_bus == bus {
            p_coeffs.push((pm[t], 1.0));
        }
    }
    for (pcc_bus, qm) in &model.index.qm {
        if *pcc_bus == bus {
            q_coeffs.push((qm[t], 1.0));
        }
    }

    let pd = profiles.pd_at(&b.id, t) / norm.s_base;
    model.add_row(format!("bal_p_{name}_t{t:02}"), p_coeffs, Sense::Eq, pd);

    if b.kind == BusKind::AC {
        let qd = profiles.qd_at(&b.id, t) / norm.s_base;
        model.add_row(format!("bal_q_{name}_t{t:02}"), q_coeffs, Sense::Eq, qd);
    }
}

/// Commitment machinery for one dispatchable unit: capacity bounds tied to
/// the on/off state, startup/shutdown logic and forcing rows, minimum
/// up/down windows, and ramps with startup/shutdown allowances (a unit whose
/// minimum output exceeds its ramp rate could otherwise never start).
fn add_uc_constraints(model: &mut MilpModel, norm: &NormalizedNetwork, g: usize) {
    let gen = &norm.generators[g];
    if !gen.dispatchable {
        return;
    }
    let name = ident(&gen.id);
    let horizon = model.index.horizon;
    let i_ = model.index.gen_i[g].clone().expect("dispatchable");
    let y = model.index.gen_y[g].clone().expect("dispatchable");
    let z = model.index.gen_z[g].clone().expect("dispatchable");
    let p = model.index.gen_p[g].clone();
    let q = model.index.gen_q[g].clone();
    let init_on = if gen.initially_on() { 1.0 } else { 0.0 };

    for t in 0..horizon {
        model.add_row(
            format!("cap_hi_{name}_t{t:02}"),
            vec![(p[t], 1.0), (i_[t], -gen.p_max)],
            Sense::Le,
            0.0,
        );
        model.add_row(
            format!("cap_lo_{name}_t{t:02}"),
            vec![(p[t], 1.0), (i_[t], -gen.p_min)],
            Sense::Ge,
            0.0,
        );
        if let Some(q) = &q {
            model.add_row(
                format!("qcap_hi_{name}_t{t:02}"),
                vec![(q[t], 1.0), (i_[t], -gen.q_max)],
                Sense::Le,
                0.0,
            );
            model.add_row(
                format!("qcap_lo_{name}_t{t:02}"),
                vec![(q[t], 1.0), (i_[t], -gen.q_min)],
                Sense::Ge,
                0.0,
            );
        }

        // y - z = I_t - I_{t-1}
        let mut logic = vec![(y[t], 1.0), (z[t], -1.0), (i_[t], -1.0)];
        let mut rhs = -init_on;
        if t > 0 {
            logic.push((i_[t - 1], 1.0));
            rhs = 0.0;
        }
        model.add_row(format!("logic_{name}_t{t:02}"), logic, Sense::Eq, rhs);
        model.add_row(
            format!("startstop_{name}_t{t:02}"),
            vec![(y[t], 1.0), (z[t], 1.0)],
            Sense::Le,
            1.0,
        );

        // Forcing rows pin the continuous indicators to the commitment
        // pattern: y_t <= I_t, y_t <= 1 - I_{t-1}, z_t <= I_{t-1},
        // z_t <= 1 - I_t.
        model.add_row(
            format!("y_on_{name}_t{t:02}"),
            vec![(y[t], 1.0), (i_[t], -1.0)],
            Sense::Le,
            0.0,
        );
        if t > 0 {
            model.add_row(
                format!("y_prev_{name}_t{t:02}"),
                vec![(y[t], 1.0), (i_[t - 1], 1.0)],
                Sense::Le,
                1.0,
            );
            model.add_row(
                format!("z_prev_{name}_t{t:02}"),
                vec![(z[t], 1.0), (i_[t - 1], -1.0)],
                Sense::Le,
                0.0,
            );
        } else {
            model.add_row(
                format!("y_prev_{name}_t{t:02}"),
                vec![(y[t], 1.0)],
                Sense::Le,
                1.0 - init_on,
            );
            model.add_row(
                format!("z_prev_{name}_t{t:02}"),
                vec![(z[t], 1.0)],
                Sense::Le,
                init_on,
            );
        }
        model.add_row(
            format!("z_off_{name}_t{t:02}"),
            vec![(z[t], 1.0), (i_[t], 1.0)],
            Sense::Le,
            1.0,
        );

        // Minimum up: startups within the trailing window keep the unit on.
        let from = t.saturating_sub(gen.ut as usize - 1);
        let mut up: Vec<(VarId, f64)> = (from..=t).map(|tau| (y[tau], 1.0)).collect();
        up.push((i_[t], -1.0));
        model.add_row(format!("minup_{name}_t{t:02}"), up, Sense::Le, 0.0);

        // Minimum down: shutdowns within the window keep it off.
        let from = t.saturating_sub(gen.dt as usize - 1);
        let mut down: Vec<(VarId, f64)> = (from..=t).map(|tau| (z[tau], 1.0)).collect();
        down.push((i_[t], 1.0));
        model.add_row(format!("mindown_{name}_t{t:02}"), down, Sense::Le, 1.0);

        // Ramps with startup/shutdown allowances.
        let mut up = vec![(p[t], 1.0), (y[t], -gen.p_min)];
        let mut rhs = 0.0;
        if t > 0 {
            up.push((p[t - 1], -1.0));
            up.push((i_[t - 1], -gen.ru));
        } else {
            rhs = gen.init_p + gen.ru * init_on;
        }
        model.add_row(format!("rampup_{name}_t{t:02}"), up, Sense::Le, rhs);

        let mut down = vec![(p[t], -1.0), (i_[t], -gen.rd), (z[t], -gen.p_min)];
        let mut rhs = 0.0;
        if t > 0 {
            down.push((p[t - 1], 1.0));
        } else {
            rhs = -gen.init_p;
        }
        model.add_row(format!("rampdown_{name}_t{t:02}"), down, Sense::Le, rhs);
    }
}

/// Charge/discharge split with exclusivity, energy recursion with the
/// discharge efficiency, and the depth-of-discharge floor as energy bounds.
fn add_storage_constraints(
    model: &mut MilpModel,
    norm: &NormalizedNetwork,
    s: usize,
    opts: &BuildOptions,
) {
    let sto = &norm.storages[s];
    let name = ident(&sto.id);
    let horizon = model.index.horizon;
    let pb = model.index.sto_pb[s].clone();
    let ch = model.index.sto_ch[s].clone();
    let dch = model.index.sto_dch[s].clone();
    let e = model.index.sto_e[s].clone();
    let u = model.index.sto_u[s].clone();
    let v = model.index.sto_v[s].clone();

    for t in 0..horizon {
        model.add_row(
            format!("pb_def_{name}_t{t:02}"),
            vec![(pb[t], 1.0), (dch[t], -1.0), (ch[t], -1.0)],
            Sense::Eq,
            0.0,
        );
        // E_t = E_{t-1} - dch_t / eta - ch_t
        let mut energy = vec![(e[t], 1.0), (dch[t], 1.0 / sto.eta), (ch[t], 1.0)];
        let mut rhs = 0.0;
        if t > 0 {
            energy.push((e[t - 1], -1.0));
        } else {
            rhs = sto.e_init;
        }
        model.add_row(format!("energy_{name}_t{t:02}"), energy, Sense::Eq, rhs);
        model.add_row(
            format!("excl_{name}_t{t:02}"),
            vec![(u[t], 1.0), (v[t], 1.0)],
            Sense::Le,
            1.0,
        );
        model.add_row(
            format!("dch_gate_{name}_t{t:02}"),
            vec![(dch[t], 1.0), (v[t], -sto.p_rating)],
            Sense::Le,
            0.0,
        );
        model.add_row(
            format!("ch_gate_{name}_t{t:02}"),
            vec![(ch[t], 1.0), (u[t], sto.p_rating)],
            Sense::Ge,
            0.0,
        );
    }
    if opts.require_terminal_energy && horizon > 0 {
        model.add_row(
            format!("terminal_{name}"),
            vec![(e[horizon - 1], 1.0)],
            Sense::Ge,
            sto.e_init,
        );
    }
}

// ---------------------------------------------------------------------------
// Solution extraction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    FeasibleNonconverged,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct DgSchedule {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub on: Vec<bool>,
    pub startup: Vec<bool>,
    pub shutdown: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct StorageSchedule {
    pub p_b: Vec<f64>,
    pub p_ch: Vec<f64>,
    pub p_dch: Vec<f64>,
    pub energy: Vec<f64>,
    pub charging: Vec<bool>,
    pub discharging: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct ConverterSchedule {
    pub rect: Vec<f64>,
    pub inv: Vec<f64>,
    pub rectifying: Vec<bool>,
    pub qc: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LineFlows {
    pub pl_fwd: Vec<f64>,
    pub pl_rev: Vec<f64>,
    pub ql_fwd: Vec<f64>,
    pub ql_rev: Vec<f64>,
    pub loss: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PccExchange {
    pub bus: usize,
    pub pm: Vec<f64>,
    /// Empty for a DC connection point.
    pub qm: Vec<f64>,
}

/// All decision values in per-unit, hour-major, plus objective and losses.
#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective_usd: f64,
    pub total_losses_kw: f64,
    pub horizon: usize,
    pub s_base: f64,
    /// The linearization point the model was built at.
    pub point: LinearizationPoint,
    /// [t][bus]
    pub bus_dv: Vec<Vec<f64>>,
    /// [t][bus]; zero for DC buses
    pub bus_dth: Vec<Vec<f64>>,
    /// [line]; None for open lines
    pub lines: Vec<Option<LineFlows>>,
    pub generators: Vec<DgSchedule>,
    pub storages: Vec<StorageSchedule>,
    pub converters: Vec<ConverterSchedule>,
    pub exchange: Vec<PccExchange>,
}

impl Solution {
    /// Storage state in the -1 (charging) / 0 (idle) / 1 (discharging)
    /// convention, derived from the power split.
    pub fn storage_state(&self, s: usize, t: usize) -> i8 {
        let sto = &self.storages[s];
        if sto.p_dch[t] > 1e-9 {
            1
        } else if sto.p_ch[t] < -1e-9 {
            -1
        } else {
            0
        }
    }
}

/// Maps a solver outcome back onto the network entities; binaries must sit
/// within `int_tol` of 0/1 and the objective must reproduce from the values.
pub fn extract_solution(
    model: &MilpModel,
    norm: &NormalizedNetwork,
    profiles: &ProfileSet,
    point: &LinearizationPoint,
    outcome: &SolverOutcome,
    int_tol: f64,
) -> Result<Solution, SchedulerError> {
    let status = match outcome.status {
        OutcomeStatus::Optimal => SolveStatus::Optimal,
        OutcomeStatus::FeasibleNonconverged => SolveStatus::FeasibleNonconverged,
        other => return Err(SchedulerError::NotSolved(other)),
    };
    let x = &outcome.values;
    let horizon = model.index.horizon;

    let val = |v: VarId| x[v.index()];
    let as_bool = |v: VarId| -> Result<bool, SchedulerError> {
        let raw = x[v.index()];
        if (raw - raw.round()).abs() > int_tol {
            return Err(SchedulerError::IntegralityViolation {
                name: model.vars[v.index()].name.clone(),
                value: raw,
            });
        }
        Ok(raw.round() >= 0.5)
    };

    let mut bus_dv = vec![vec![0.0; norm.buses.len()]; horizon];
    let mut bus_dth = vec![vec![0.0; norm.buses.len()]; horizon];
    for b in 0..norm.buses.len() {
        for t in 0..horizon {
            bus_dv[t][b] = val(model.index.dv[b][t]);
            if let Some(dth) = &model.index.dth[b] {
                bus_dth[t][b] = val(dth[t]);
            }
        }
    }

    let mut lines = Vec::with_capacity(norm.lines.len());
    let mut total_loss_pu = 0.0;
    for (l, line) in norm.lines.iter().enumerate() {
        match &model.index.pl[l] {
            None => lines.push(None),
            Some(pl) => {
                let mut flows = LineFlows {
                    pl_fwd: Vec::with_capacity(horizon),
                    pl_rev: Vec::with_capacity(horizon),
                    ql_fwd: Vec::new(),
                    ql_rev: Vec::new(),
                    loss: Vec::with_capacity(horizon),
                };
                for t in 0..horizon {
                    flows.pl_fwd.push(val(pl[0][t]));
                    flows.pl_rev.push(val(pl[1][t]));
                    let loss = pair_loss(line, bus_dv[t][line.from], bus_dv[t][line.to]);
                    flows.loss.push(loss);
                    total_loss_pu += loss;
                }
                if let Some(ql) = &model.index.ql[l] {
                    for t in 0..horizon {
                        flows.ql_fwd.push(val(ql[0][t]));
                        flows.ql_rev.push(val(ql[1][t]));
                    }
                }
                lines.push(Some(flows));
            }
        }
    }

    let mut generators = Vec::new();
    for (g, _) in norm.generators.iter().enumerate() {
        let p: Vec<f64> = (0..horizon).map(|t| val(model.index.gen_p[g][t])).collect();
        let q = match &model.index.gen_q[g] {
            Some(qv) => (0..horizon).map(|t| val(qv[t])).collect(),
            None => vec![0.0; horizon],
        };
        let (mut on, mut startup, mut shutdown) =
            (vec![true; horizon], vec![false; horizon], vec![false; horizon]);
        if let Some(iv) = &model.index.gen_i[g] {
            let yv = model.index.gen_y[g].as_ref().expect("dispatchable");
            let zv = model.index.gen_z[g].as_ref().expect("dispatchable");
            for t in 0..horizon {
                on[t] = as_bool(iv[t])?;
                startup[t] = as_bool(yv[t])?;
                shutdown[t] = as_bool(zv[t])?;
            }
        }
        generators.push(DgSchedule {
            p,
            q,
            on,
            startup,
            shutdown,
        });
    }

    let mut storages = Vec::new();
    for s in 0..norm.storages.len() {
        let mut sched = StorageSchedule {
            p_b: Vec::new(),
            p_ch: Vec::new(),
            p_dch: Vec::new(),
            energy: Vec::new(),
            charging: Vec::new(),
            discharging: Vec::new(),
        };
        for t in 0..horizon {
            sched.p_b.push(val(model.index.sto_pb[s][t]));
            sched.p_ch.push(val(model.index.sto_ch[s][t]));
            sched.p_dch.push(val(model.index.sto_dch[s][t]));
            sched.energy.push(val(model.index.sto_e[s][t]));
            sched.charging.push(as_bool(model.index.sto_u[s][t])?);
            sched.discharging.push(as_bool(model.index.sto_v[s][t])?);
        }
        storages.push(sched);
    }

    let mut converters = Vec::new();
    for c in 0..norm.converters.len() {
        let mut sched = ConverterSchedule {
            rect: Vec::new(),
            inv: Vec::new(),
            rectifying: Vec::new(),
            qc: Vec::new(),
        };
        for t in 0..horizon {
            sched.rect.push(val(model.index.conv_rect[c][t]));
            sched.inv.push(val(model.index.conv_inv[c][t]));
            sched.rectifying.push(as_bool(model.index.conv_d[c][t])?);
            sched.qc.push(val(model.index.conv_qc[c][t]));
        }
        converters.push(sched);
    }

    let mut exchange = Vec::new();
    for (bus, pm) in &model.index.pm {
        let qm = model
            .index
            .qm
            .iter()
            .find(|(b, _)| b == bus)
            .map(|(_, qv)| (0..horizon).map(|t| val(qv[t])).collect())
            .unwrap_or_default();
        exchange.push(PccExchange {
            bus: *bus,
            pm: (0..horizon).map(|t| val(pm[t])).collect(),
            qm,
        });
    }

    // Objective from first principles; must agree with the solver.
    let mut recomputed = 0.0;
    for (g, gen) in norm.generators.iter().enumerate() {
        if gen.dispatchable {
            for t in 0..horizon {
                recomputed += gen.cost * norm.s_base * generators[g].p[t];
            }
        }
    }
    for pcc in &exchange {
        for t in 0..horizon {
            recomputed += profiles.price[t] * norm.s_base * pcc.pm[t];
        }
    }
    let scale = outcome.objective.abs().max(1.0);
    if (recomputed - outcome.objective).abs() > 1e-8 * scale {
        return Err(SchedulerError::ObjectiveMismatch {
            solver: outcome.objective,
            recomputed,
        });
    }

    Ok(Solution {
        status,
        objective_usd: recomputed,
        total_losses_kw: total_loss_pu * norm.s_base,
        horizon,
        s_base: norm.s_base,
        point: point.clone(),
        bus_dv,
        bus_dth,
        lines,
        generators,
        storages,
        converters,
        exchange,
    })
}

// ---------------------------------------------------------------------------
// LP text export
// ---------------------------------------------------------------------------

impl MilpModel {
    /// Serializes the model in LP text format (Minimize / Subject To /
    /// Bounds / Binaries / End) for cross-checking with external solvers.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::with_capacity(1 << 16);
        out.push_str("\\ day-ahead scheduling model export\n");
        out.push_str("Minimize\n obj:");
        let mut width = 5;
        for (v, c) in &self.objective {
            let term = format!(" + {} {}", fmt_num(*c), self.vars[v.index()].name);
            wrap(&mut out, &mut width, &term);
        }
        out.push_str("\nSubject To\n");
        for row in &self.rows {
            let mut line = format!(" {}:", row.name);
            let mut width = line.len();
            out.push_str(&line);
            line.clear();
            for (k, (v, c)) in row.coeffs.iter().enumerate() {
                let sign = if *c < 0.0 { "-" } else if k == 0 { "" } else { "+" };
                let term = format!(" {sign} {} {}", fmt_num(c.abs()), self.vars[v.index()].name);
                wrap(&mut out, &mut width, &term);
            }
            let sense = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = write!(out, " {sense} {}\n", fmt_num(row.rhs));
        }
        out.push_str("Bounds\n");
        for v in &self.vars {
            if v.kind == VarKind::Binary {
                // Bounds tighter than {0,1} (fixed binaries) still matter.
                if v.lb > 0.0 || v.ub < 1.0 {
                    let _ = writeln!(out, " {} <= {} <= {}", fmt_num(v.lb), v.name, fmt_num(v.ub));
                }
                continue;
            }
            if v.lb == f64::NEG_INFINITY && v.ub == f64::INFINITY {
                let _ = writeln!(out, " {} free", v.name);
            } else {
                let _ = writeln!(out, " {} <= {} <= {}", fmt_num(v.lb), v.name, fmt_num(v.ub));
            }
        }
        out.push_str("Binaries\n");
        let mut width = 0usize;
        for v in &self.vars {
            if v.kind == VarKind::Binary {
                let term = format!(" {}", v.name);
                wrap(&mut out, &mut width, &term);
            }
        }
        out.push_str("\nEnd\n");
        out
    }
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn wrap(out: &mut String, width: &mut usize, term: &str) {
    if *width + term.len() > 200 {
        out.push_str("\n   ");
        *width = 3;
    }
    out.push_str(term);
    *width += term.len();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{parse_network, to_per_unit};
    use crate::profiles::ProfileSet;
    use std::collections::BTreeMap;

    fn one_bus_net() -> crate::network::Network {
        parse_network(
            &serde_json::json!({
                "base": {"s_base": 1000.0, "v_base_ac": 1.0},
                "buses": [{"id": "1", "kind": "AC", "v_min": 0.9, "v_max": 1.1, "pcc": true}],
                "lines": [],
                "generators": [{
                    "id": "G1", "bus": "1", "dispatchable": true, "cost": 0.03,
                    "p_min": 10.0, "p_max": 100.0, "q_min": -50.0, "q_max": 50.0,
                    "ru": 100.0, "rd": 100.0, "ut": 1, "dt": 1,
                    "init_off_hours": 1
                }]
            })
            .to_string(),
        )
        .unwrap()
    }

    fn one_hour_profiles(load: f64, price: f64, pm_max: f64) -> ProfileSet {
        ProfileSet {
            horizon: 1,
            pd: BTreeMap::from([("1".to_string(), vec![load])]),
            qd: BTreeMap::new(),
            price: vec![price],
            availability: BTreeMap::new(),
            pm_max,
            label: None,
        }
    }

    #[test]
    fn degenerate_model_has_balance_and_capacity() {
        let net = one_bus_net();
        let norm = to_per_unit(&net).unwrap();
        let profiles = one_hour_profiles(100.0, 0.0, 0.0);
        let point = LinearizationPoint::flat(1, 1);
        let model = build_model(&norm, &profiles, &point, &BuildOptions::default()).unwrap();

        let bal = model.rows().iter().find(|r| r.name == "bal_p_1_t00").unwrap();
        assert_eq!(bal.sense, Sense::Eq);
        assert!((bal.rhs - 0.1).abs() < 1e-12, "load in pu");
        assert!(model.rows().iter().any(|r| r.name == "cap_lo_G1_t00"));
        assert!(model.rows().iter().any(|r| r.name == "cap_hi_G1_t00"));
    }

    #[test]
    fn forced_commitment_produces_lower_bound_row() {
        let net = one_bus_net();
        let norm = to_per_unit(&net).unwrap();
        let profiles = one_hour_profiles(100.0, 0.05, 50.0);
        let point = LinearizationPoint::flat(1, 1);
        let model = build_model(&norm, &profiles, &point, &BuildOptions::default()).unwrap();
        let row = model.rows().iter().find(|r| r.name == "cap_lo_G1_t00").unwrap();
        // P - p_min * I >= 0 with p_min = 10 kW = 0.01 pu
        assert_eq!(row.sense, Sense::Ge);
        let coef_i = row
            .coeffs
            .iter()
            .find(|(v, _)| model.vars()[v.index()].name.starts_with("I_"))
            .unwrap()
            .1;
        assert!((coef_i + 0.01).abs() < 1e-12);
    }

    #[test]
    fn lp_export_round_trips_through_parser() {
        let net = one_bus_net();
        let norm = to_per_unit(&net).unwrap();
        let profiles = one_hour_profiles(100.0, 0.05, 50.0);
        let point = LinearizationPoint::flat(1, 1);
        let model = build_model(&norm, &profiles, &point, &BuildOptions::default()).unwrap();
        let text = model.to_lp_format();
        let parsed = crate::solver::parse_lp(&text).unwrap();
        assert_eq!(parsed.problem.num_vars(), model.num_vars());
        assert_eq!(parsed.problem.rows.len(), model.num_rows());
        assert_eq!(parsed.binaries.len(), model.binary_vars().len());
    }
}
