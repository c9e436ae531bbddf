//! Microgrid network model: domain types, JSON ingestion, validation,
//! per-unit normalization, and series-admittance computation.
//!
//! The network is a typed graph of AC and DC buses joined by same-kind lines,
//! with bidirectional converters as the only AC↔DC couplings. All electrical
//! data enters in physical units (ohm, kW, kVAr, kWh) and is normalized to a
//! common per-unit base before any model building.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{kind} `{id}` references unknown bus `{bus}`")]
    DanglingBus {
        kind: &'static str,
        id: String,
        bus: String,
    },
    #[error("{0}")]
    KindMismatch(String),
    #[error("invalid {kind} `{id}`: {reason}")]
    Invalid {
        kind: &'static str,
        id: String,
        reason: String,
    },
    #[error("{0} sub-graph is disconnected: buses {1:?} are isolated from bus `{2}`")]
    Disconnected(&'static str, Vec<String>, String),
    #[error("network has no bus flagged as a utility connection point")]
    NoPcc,
    #[error("nonpositive resistance on line `{0}`")]
    NonpositiveResistance(String),
}

/// Bus electrical kind. Lines must join buses of their own kind; converters
/// bridge an AC bus to a DC bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusKind {
    AC,
    DC,
}

impl std::fmt::Display for BusKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BusKind::AC => write!(f, "AC"),
            BusKind::DC => write!(f, "DC"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BusSpec {
    pub id: String,
    pub kind: BusKind,
    /// Voltage magnitude lower bound (per-unit).
    pub v_min: f64,
    /// Voltage magnitude upper bound (per-unit).
    pub v_max: f64,
    /// Marks a utility connection point. A DC pcc carries no reactive
    /// exchange.
    #[serde(default)]
    pub pcc: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LineSpec {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    /// Series resistance (ohm).
    pub r: f64,
    /// Series reactance (ohm). Ignored for DC lines.
    pub x: f64,
    pub kind: BusKind,
    /// Active power flow capacity (kW).
    pub pl_max: f64,
    /// Reactive power flow capacity (kVAr). Treated as 0 for DC lines.
    #[serde(default)]
    pub ql_max: f64,
    /// Normally-open switch state; an open line is wired but carries no
    /// flow until a scenario transform closes it.
    #[serde(default)]
    pub open: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConverterSpec {
    pub id: String,
    pub ac_bus: String,
    pub dc_bus: String,
    /// Active power rating (kW).
    pub pc_max: f64,
    /// Reactive power rating on the AC side (kVAr).
    pub qc_max: f64,
    /// AC→DC conversion efficiency, in (0, 1].
    pub eta_rect: f64,
    /// DC→AC conversion efficiency, in (0, 1].
    pub eta_inv: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GeneratorSpec {
    pub id: String,
    pub bus: String,
    pub dispatchable: bool,
    /// Linear cost coefficient ($/kWh). Zero for nondispatchable units.
    pub cost: f64,
    pub p_min: f64,
    pub p_max: f64,
    #[serde(default)]
    pub q_min: f64,
    #[serde(default)]
    pub q_max: f64,
    /// Ramp-up rate (kW/h).
    #[serde(default)]
    pub ru: f64,
    /// Ramp-down rate (kW/h).
    #[serde(default)]
    pub rd: f64,
    /// Minimum up time (h).
    #[serde(default)]
    pub ut: u32,
    /// Minimum down time (h).
    #[serde(default)]
    pub dt: u32,
    /// Hours the unit has already been ON at the start of the horizon.
    #[serde(default)]
    pub init_on_hours: u32,
    /// Hours the unit has already been OFF at the start of the horizon.
    #[serde(default)]
    pub init_off_hours: u32,
    /// Output (kW) in the hour preceding the horizon.
    #[serde(default)]
    pub init_p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StorageSpec {
    pub id: String,
    pub bus: String,
    /// Charge/discharge power limit (kW).
    pub p_rating: f64,
    /// Energy capacity (kWh).
    pub e_max: f64,
    /// Depth of discharge, in (0, 1]. Stored energy floor is (1-dod)*e_max.
    pub dod: f64,
    /// Discharge efficiency, in (0, 1].
    pub eta: f64,
    /// Stored energy at the start of the horizon (kWh).
    pub e_init: f64,
}

/// Common per-unit base. A single power base covers both sub-systems; the DC
/// voltage base defaults to the AC one so converter coupling stays
/// dimensionless.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PerUnitBase {
    /// Power base (kVA).
    pub s_base: f64,
    /// AC voltage base (kV).
    pub v_base_ac: f64,
    /// DC voltage base (kV). Defaults to `v_base_ac`.
    pub v_base_dc: Option<f64>,
}

impl PerUnitBase {
    pub fn v_base_dc(&self) -> f64 {
        self.v_base_dc.unwrap_or(self.v_base_ac)
    }

    /// Impedance base (ohm) for the given bus kind: v_base^2 / s_base with
    /// voltage in kV and power in kVA gives kV^2*1000/kVA ohms.
    pub fn z_base(&self, kind: BusKind) -> f64 {
        let v = match kind {
            BusKind::AC => self.v_base_ac,
            BusKind::DC => self.v_base_dc(),
        };
        v * v * 1000.0 / self.s_base
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Network {
    pub base: PerUnitBase,
    pub buses: Vec<BusSpec>,
    pub lines: Vec<LineSpec>,
    #[serde(default)]
    pub converters: Vec<ConverterSpec>,
    #[serde(default)]
    pub generators: Vec<GeneratorSpec>,
    #[serde(default)]
    pub storages: Vec<StorageSpec>,
}

/// Series admittance from series impedance. AC lines keep both conductance
/// and susceptance; DC steady state has no reactance, so g = 1/r and b = 0
/// regardless of the listed reactance.
pub fn line_admittance(r: f64, x: f64, kind: BusKind) -> Result<(f64, f64), NetworkError> {
    if r <= 0.0 {
        return Err(NetworkError::NonpositiveResistance(format!(
            "r = {r} must be positive"
        )));
    }
    Ok(match kind {
        BusKind::AC => {
            let denom = r * r + x * x;
            (r / denom, -x / denom)
        }
        BusKind::DC => (1.0 / r, 0.0),
    })
}

/// Parses and fully validates a network document (JSON encoding of the
/// schema: top-level keys `base`, `buses`, `lines`, `converters`,
/// `generators`, `storages`).
pub fn parse_network(document: &str) -> Result<Network, NetworkError> {
    let net: Network =
        serde_json::from_str(document).map_err(|e| NetworkError::Schema(e.to_string()))?;
    net.validate()?;
    Ok(net)
}

impl Network {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serialization cannot fail")
    }

    pub fn bus(&self, id: &str) -> Option<&BusSpec> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn bus_index(&self) -> BTreeMap<String, usize> {
        self.buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.clone(), i))
            .collect()
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.base.s_base <= 0.0 || self.base.v_base_ac <= 0.0 || self.base.v_base_dc() <= 0.0 {
            return Err(NetworkError::Schema(
                "per-unit base entries must be positive".into(),
            ));
        }

        check_unique("bus", self.buses.iter().map(|b| &b.id))?;
        check_unique("line", self.lines.iter().map(|l| &l.id))?;
        check_unique("converter", self.converters.iter().map(|c| &c.id))?;
        check_unique("generator", self.generators.iter().map(|g| &g.id))?;
        check_unique("storage", self.storages.iter().map(|s| &s.id))?;

        let idx = self.bus_index();

        for b in &self.buses {
            if b.v_min >= b.v_max {
                return Err(NetworkError::Invalid {
                    kind: "bus",
                    id: b.id.clone(),
                    reason: format!("v_min {} must be below v_max {}", b.v_min, b.v_max),
                });
            }
        }

        for l in &self.lines {
            let from = idx.get(&l.from_bus).ok_or_else(|| NetworkError::DanglingBus {
                kind: "line",
                id: l.id.clone(),
                bus: l.from_bus.clone(),
            })?;
            let to = idx.get(&l.to_bus).ok_or_else(|| NetworkError::DanglingBus {
                kind: "line",
                id: l.id.clone(),
                bus: l.to_bus.clone(),
            })?;
            let (fk, tk) = (self.buses[*from].kind, self.buses[*to].kind);
            if fk != l.kind || tk != l.kind {
                return Err(NetworkError::KindMismatch(format!(
                    "{} line `{}` joins {} bus `{}` and {} bus `{}`",
                    l.kind, l.id, fk, l.from_bus, tk, l.to_bus
                )));
            }
            if l.r <= 0.0 {
                return Err(NetworkError::NonpositiveResistance(l.id.clone()));
            }
            if l.pl_max <= 0.0 {
                return Err(NetworkError::Invalid {
                    kind: "line",
                    id: l.id.clone(),
                    reason: "pl_max must be positive".into(),
                });
            }
        }

        for c in &self.converters {
            let ac = idx.get(&c.ac_bus).ok_or_else(|| NetworkError::DanglingBus {
                kind: "converter",
                id: c.id.clone(),
                bus: c.ac_bus.clone(),
            })?;
            let dc = idx.get(&c.dc_bus).ok_or_else(|| NetworkError::DanglingBus {
                kind: "converter",
                id: c.id.clone(),
                bus: c.dc_bus.clone(),
            })?;
            if self.buses[*ac].kind != BusKind::AC || self.buses[*dc].kind != BusKind::DC {
                return Err(NetworkError::KindMismatch(format!(
                    "converter `{}` must join an AC bus to a DC bus (got {} `{}` / {} `{}`)",
                    c.id, self.buses[*ac].kind, c.ac_bus, self.buses[*dc].kind, c.dc_bus
                )));
            }
            for (name, eta) in [("eta_rect", c.eta_rect), ("eta_inv", c.eta_inv)] {
                if !(eta > 0.0 && eta <= 1.0) {
                    return Err(NetworkError::Invalid {
                        kind: "converter",
                        id: c.id.clone(),
                        reason: format!("{name} = {eta} outside (0, 1]"),
                    });
                }
            }
            if c.pc_max < 0.0 || c.qc_max < 0.0 {
                return Err(NetworkError::Invalid {
                    kind: "converter",
                    id: c.id.clone(),
                    reason: "ratings must be nonnegative".into(),
                });
            }
        }

        for g in &self.generators {
            let bus = idx.get(&g.bus).ok_or_else(|| NetworkError::DanglingBus {
                kind: "generator",
                id: g.id.clone(),
                bus: g.bus.clone(),
            })?;
            let _ = bus;
            if g.p_min > g.p_max {
                return Err(NetworkError::Invalid {
                    kind: "generator",
                    id: g.id.clone(),
                    reason: format!("p_min {} exceeds p_max {}", g.p_min, g.p_max),
                });
            }
            if g.dispatchable {
                if g.ut < 1 || g.dt < 1 {
                    return Err(NetworkError::Invalid {
                        kind: "generator",
                        id: g.id.clone(),
                        reason: "dispatchable units need ut >= 1 and dt >= 1".into(),
                    });
                }
            } else if g.cost != 0.0 || g.ut != 0 || g.dt != 0 {
                return Err(NetworkError::Invalid {
                    kind: "generator",
                    id: g.id.clone(),
                    reason: "nondispatchable units carry zero cost and no commitment data".into(),
                });
            }
        }

        for s in &self.storages {
            idx.get(&s.bus).ok_or_else(|| NetworkError::DanglingBus {
                kind: "storage",
                id: s.id.clone(),
                bus: s.bus.clone(),
            })?;
            if !(s.dod > 0.0 && s.dod <= 1.0) || !(s.eta > 0.0 && s.eta <= 1.0) {
                return Err(NetworkError::Invalid {
                    kind: "storage",
                    id: s.id.clone(),
                    reason: "dod and eta must lie in (0, 1]".into(),
                });
            }
            let floor = (1.0 - s.dod) * s.e_max;
            if s.e_init < floor - 1e-9 || s.e_init > s.e_max + 1e-9 {
                return Err(NetworkError::Invalid {
                    kind: "storage",
                    id: s.id.clone(),
                    reason: format!(
                        "e_init {} outside [{}, {}] allowed by depth of discharge",
                        s.e_init, floor, s.e_max
                    ),
                });
            }
            if s.p_rating <= 0.0 || s.e_max <= 0.0 {
                return Err(NetworkError::Invalid {
                    kind: "storage",
                    id: s.id.clone(),
                    reason: "p_rating and e_max must be positive".into(),
                });
            }
        }

        if !self.buses.iter().any(|b| b.pcc) {
            return Err(NetworkError::NoPcc);
        }

        // Wiring connectivity per kind: open lines still count as wiring.
        // Converters are checked separately as the only AC<->DC couplings.
        self.check_kind_connectivity(BusKind::AC)?;
        self.check_kind_connectivity(BusKind::DC)?;
        Ok(())
    }

    fn check_kind_connectivity(&self, kind: BusKind) -> Result<(), NetworkError> {
        let members: Vec<usize> = self
            .buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == kind)
            .map(|(i, _)| i)
            .collect();
        if members.len() <= 1 {
            return Ok(());
        }
        let idx = self.bus_index();
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for l in self.lines.iter().filter(|l| l.kind == kind) {
            let (a, b) = (idx[&l.from_bus], idx[&l.to_bus]);
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![members[0]];
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                if let Some(next) = adj.get(&v) {
                    stack.extend(next.iter().copied());
                }
            }
        }
        let missing: Vec<String> = members
            .iter()
            .filter(|i| !seen.contains(i))
            .map(|i| self.buses[*i].id.clone())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            let label = match kind {
                BusKind::AC => "AC",
                BusKind::DC => "DC",
            };
            Err(NetworkError::Disconnected(
                label,
                missing,
                self.buses[members[0]].id.clone(),
            ))
        }
    }
}

fn check_unique<'a, I: Iterator<Item = &'a String>>(
    kind: &'static str,
    ids: I,
) -> Result<(), NetworkError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(NetworkError::DuplicateId {
                kind,
                id: id.clone(),
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Per-unit normalization
// ---------------------------------------------------------------------------

/// A line prepared for model building: endpoint indices, per-unit series
/// admittance, and per-unit capacities.
#[derive(Debug, Clone)]
pub struct NormLine {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub kind: BusKind,
    pub open: bool,
    /// Per-unit conductance.
    pub g: f64,
    /// Per-unit susceptance (0 for DC lines).
    pub b: f64,
    pub pl_max: f64,
    pub ql_max: f64,
    /// Per-unit series impedance, kept for round-trip checks.
    pub r: f64,
    pub x: f64,
}

#[derive(Debug, Clone)]
pub struct NormGenerator {
    pub id: String,
    pub bus: usize,
    pub dispatchable: bool,
    /// $/kWh, unchanged by normalization.
    pub cost: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub ru: f64,
    pub rd: f64,
    pub ut: u32,
    pub dt: u32,
    pub init_on_hours: u32,
    pub init_off_hours: u32,
    pub init_p: f64,
}

impl NormGenerator {
    /// Commitment state in the hour before the horizon starts.
    pub fn initially_on(&self) -> bool {
        self.init_on_hours > 0
    }
}

#[derive(Debug, Clone)]
pub struct NormStorage {
    pub id: String,
    pub bus: usize,
    pub p_rating: f64,
    pub e_max: f64,
    pub e_floor: f64,
    pub eta: f64,
    pub e_init: f64,
}

#[derive(Debug, Clone)]
pub struct NormConverter {
    pub id: String,
    pub ac_bus: usize,
    pub dc_bus: usize,
    pub pc_max: f64,
    pub qc_max: f64,
    pub eta_rect: f64,
    pub eta_inv: f64,
}

#[derive(Debug, Clone)]
pub struct NormBus {
    pub id: String,
    pub kind: BusKind,
    pub pcc: bool,
    /// Voltage deviation bounds in per-unit: [v_min - 1, v_max - 1].
    pub dv_min: f64,
    pub dv_max: f64,
}

/// Network scaled to a common per-unit system. Impedances are divided by
/// z_base (so admittances are multiplied by it), powers and capacities by
/// s_base. Cost coefficients stay in $/kWh; the scheduler re-applies s_base
/// when forming objective terms.
#[derive(Debug, Clone)]
pub struct NormalizedNetwork {
    pub s_base: f64,
    pub buses: Vec<NormBus>,
    pub lines: Vec<NormLine>,
    pub converters: Vec<NormConverter>,
    pub generators: Vec<NormGenerator>,
    pub storages: Vec<NormStorage>,
    pub bus_index: BTreeMap<String, usize>,
    /// References removing the per-island voltage/angle null space: one bus
    /// per line-connected component, pcc preferred, then converter DC bus,
    /// then lowest id.
    pub references: Vec<usize>,
    /// Line-connected component id per bus (lines of the bus kind only,
    /// open or closed).
    pub line_component: Vec<usize>,
}

impl NormalizedNetwork {
    pub fn kw(&self, pu: f64) -> f64 {
        pu * self.s_base
    }

    pub fn pu(&self, kw: f64) -> f64 {
        kw / self.s_base
    }

    pub fn ac_buses(&self) -> impl Iterator<Item = (usize, &NormBus)> {
        self.buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BusKind::AC)
    }

    pub fn closed_lines(&self) -> impl Iterator<Item = (usize, &NormLine)> {
        self.lines.iter().enumerate().filter(|(_, l)| !l.open)
    }

    pub fn pcc_buses(&self) -> impl Iterator<Item = (usize, &NormBus)> {
        self.buses.iter().enumerate().filter(|(_, b)| b.pcc)
    }
}

/// Scales a validated network to per-unit.
pub fn to_per_unit(net: &Network) -> Result<NormalizedNetwork, NetworkError> {
    let s_base = net.base.s_base;
    let idx = net.bus_index();

    let buses: Vec<NormBus> = net
        .buses
        .iter()
        .map(|b| NormBus {
            id: b.id.clone(),
            kind: b.kind,
            pcc: b.pcc,
            dv_min: b.v_min - 1.0,
            dv_max: b.v_max - 1.0,
        })
        .collect();

    let mut lines = Vec::with_capacity(net.lines.len());
    for l in &net.lines {
        let z_base = net.base.z_base(l.kind);
        let r_pu = l.r / z_base;
        let x_pu = l.x / z_base;
        let (g, b) = line_admittance(r_pu, x_pu, l.kind)?;
        lines.push(NormLine {
            id: l.id.clone(),
            from: idx[&l.from_bus],
            to: idx[&l.to_bus],
            kind: l.kind,
            open: l.open,
            g,
            b,
            pl_max: l.pl_max / s_base,
            ql_max: match l.kind {
                BusKind::AC => l.ql_max / s_base,
                BusKind::DC => 0.0,
            },
            r: r_pu,
            x: x_pu,
        });
    }

    let converters = net
        .converters
        .iter()
        .map(|c| NormConverter {
            id: c.id.clone(),
            ac_bus: idx[&c.ac_bus],
            dc_bus: idx[&c.dc_bus],
            pc_max: c.pc_max / s_base,
            qc_max: c.qc_max / s_base,
            eta_rect: c.eta_rect,
            eta_inv: c.eta_inv,
        })
        .collect();

    let generators = net
        .generators
        .iter()
        .map(|g| NormGenerator {
            id: g.id.clone(),
            bus: idx[&g.bus],
            dispatchable: g.dispatchable,
            cost: g.cost,
            p_min: g.p_min / s_base,
            p_max: g.p_max / s_base,
            q_min: g.q_min / s_base,
            q_max: g.q_max / s_base,
            ru: g.ru / s_base,
            rd: g.rd / s_base,
            ut: g.ut,
            dt: g.dt,
            init_on_hours: g.init_on_hours,
            init_off_hours: g.init_off_hours,
            init_p: g.init_p / s_base,
        })
        .collect();

    let storages = net
        .storages
        .iter()
        .map(|s| NormStorage {
            id: s.id.clone(),
            bus: idx[&s.bus],
            p_rating: s.p_rating / s_base,
            e_max: s.e_max / s_base,
            e_floor: (1.0 - s.dod) * s.e_max / s_base,
            eta: s.eta,
            e_init: s.e_init / s_base,
        })
        .collect();

    let line_component = line_components(net, &idx);
    let n_comp = line_component.iter().copied().max().map_or(0, |m| m + 1);
    let mut references = vec![usize::MAX; n_comp];
    // pcc wins; else a converter's DC bus; else the lowest-index bus.
    for comp in 0..n_comp {
        let members: Vec<usize> = (0..buses.len())
            .filter(|&i| line_component[i] == comp)
            .collect();
        let pick = members
            .iter()
            .copied()
            .find(|&i| buses[i].pcc)
            .or_else(|| {
                members.iter().copied().find(|&i| {
                    net.converters
                        .iter()
                        .any(|c| idx[&c.dc_bus] == i || idx[&c.ac_bus] == i)
                })
            })
            .unwrap_or(members[0]);
        references[comp] = pick;
    }

    Ok(NormalizedNetwork {
        s_base,
        buses,
        lines,
        converters,
        generators,
        storages,
        bus_index: idx,
        references,
        line_component,
    })
}

/// Components of the bus graph under closed lines. Voltage levels are
/// independent across these components (converters couple power, not
/// voltage), so each needs its own reference bus; the same split drives the
/// exact power-flow oracle's slack choice.
fn line_components(net: &Network, idx: &BTreeMap<String, usize>) -> Vec<usize> {
    let n = net.buses.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for l in net.lines.iter().filter(|l| !l.open) {
        let (a, b) = (idx[&l.from_bus], idx[&l.to_bus]);
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if comp[v] == usize::MAX {
                comp[v] = next;
                stack.extend(adj[v].iter().copied());
            }
        }
        next += 1;
    }
    comp
}

// ---------------------------------------------------------------------------
// Topology report
// ---------------------------------------------------------------------------

/// Report-only view of the network topology: per-kind wiring components,
/// electrical islands (closed lines plus converters with nonzero rating),
/// pcc locations, and converter bridges.
#[derive(Debug, Clone, Serialize)]
pub struct TopologyReport {
    /// Buses of each wiring component, grouped by kind. Open lines count as
    /// wiring.
    pub kind_components: Vec<KindComponent>,
    /// Electrical islands under closed lines and active (nonzero-rated)
    /// converters.
    pub islands: Vec<Vec<String>>,
    pub pcc_buses: Vec<String>,
    pub converter_bridges: Vec<ConverterBridge>,
    /// Lines joining buses of different kinds. Always empty for a validated
    /// network; converters are the only AC<->DC couplings.
    pub cross_kind_lines: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KindComponent {
    pub kind: BusKind,
    pub buses: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConverterBridge {
    pub id: String,
    pub ac_bus: String,
    pub dc_bus: String,
    pub active: bool,
}

pub fn validate_topology(net: &Network) -> TopologyReport {
    let idx = net.bus_index();
    let n = net.buses.len();

    // Wiring components per kind (all lines).
    let mut kind_components = Vec::new();
    for kind in [BusKind::AC, BusKind::DC] {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for l in net.lines.iter().filter(|l| l.kind == kind) {
            let (a, b) = (idx[&l.from_bus], idx[&l.to_bus]);
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] || net.buses[start].kind != kind {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(net.buses[v].id.clone());
                    stack.extend(adj[v].iter().copied());
                }
            }
            comp.sort_by_key(|id| sort_key(id));
            kind_components.push(KindComponent { kind, buses: comp });
        }
    }

    // Electrical islands: closed lines + converters with pc_max > 0.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for l in net.lines.iter().filter(|l| !l.open) {
        let (a, b) = (idx[&l.from_bus], idx[&l.to_bus]);
        adj[a].push(b);
        adj[b].push(a);
    }
    for c in net.converters.iter().filter(|c| c.pc_max > 0.0) {
        let (a, b) = (idx[&c.ac_bus], idx[&c.dc_bus]);
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut islands = Vec::new();
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                comp.push(net.buses[v].id.clone());
                stack.extend(adj[v].iter().copied());
            }
        }
        comp.sort_by_key(|id| sort_key(id));
        islands.push(comp);
    }

    TopologyReport {
        kind_components,
        islands,
        pcc_buses: net
            .buses
            .iter()
            .filter(|b| b.pcc)
            .map(|b| b.id.clone())
            .collect(),
        converter_bridges: net
            .converters
            .iter()
            .map(|c| ConverterBridge {
                id: c.id.clone(),
                ac_bus: c.ac_bus.clone(),
                dc_bus: c.dc_bus.clone(),
                active: c.pc_max > 0.0,
            })
            .collect(),
        cross_kind_lines: Vec::new(),
    }
}

/// Numeric-aware ordering so bus "9" sorts before "10".
fn sort_key(id: &str) -> (u64, String) {
    match id.parse::<u64>() {
        Ok(n) => (n, String::new()),
        Err(_) => (u64::MAX, id.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_bus_json() -> String {
        serde_json::json!({
            "base": {"s_base": 1000.0, "v_base_ac": 12.66},
            "buses": [
                {"id": "1", "kind": "AC", "v_min": 0.9, "v_max": 1.05, "pcc": true},
                {"id": "2", "kind": "AC", "v_min": 0.9, "v_max": 1.05}
            ],
            "lines": [
                {"id": "L1", "from_bus": "1", "to_bus": "2", "r": 0.0922, "x": 0.047,
                 "kind": "AC", "pl_max": 4600.0, "ql_max": 4600.0}
            ]
        })
        .to_string()
    }

    #[test]
    fn parses_minimal_two_bus_document() {
        let net = parse_network(&two_bus_json()).unwrap();
        assert_eq!(net.buses.len(), 2);
        assert_eq!(net.lines.len(), 1);
    }

    #[test]
    fn rejects_kind_mismatch_on_line() {
        let mut doc: serde_json::Value = serde_json::from_str(&two_bus_json()).unwrap();
        doc["lines"][0]["kind"] = "DC".into();
        let err = parse_network(&doc.to_string()).unwrap_err();
        assert!(matches!(err, NetworkError::KindMismatch(_)), "{err}");
    }

    #[test]
    fn rejects_duplicate_bus_id() {
        let mut doc: serde_json::Value = serde_json::from_str(&two_bus_json()).unwrap();
        doc["buses"][1]["id"] = "1".into();
        let err = parse_network(&doc.to_string()).unwrap_err();
        assert!(matches!(err, NetworkError::DuplicateId { .. }), "{err}");
    }

    #[test]
    fn rejects_dangling_bus_reference() {
        let mut doc: serde_json::Value = serde_json::from_str(&two_bus_json()).unwrap();
        doc["lines"][0]["to_bus"] = "99".into();
        let err = parse_network(&doc.to_string()).unwrap_err();
        assert!(matches!(err, NetworkError::DanglingBus { .. }), "{err}");
    }

    #[test]
    fn rejects_disconnected_subgraph() {
        let mut doc: serde_json::Value = serde_json::from_str(&two_bus_json()).unwrap();
        doc["buses"]
            .as_array_mut()
            .unwrap()
            .push(serde_json::json!({"id": "3", "kind": "AC", "v_min": 0.9, "v_max": 1.05}));
        let err = parse_network(&doc.to_string()).unwrap_err();
        assert!(matches!(err, NetworkError::Disconnected(..)), "{err}");
    }

    #[test]
    fn admittance_matches_hand_values() {
        // r/(r^2+x^2) and -x/(r^2+x^2) on the 0.0922 + j0.0470 ohm line.
        let (g, b) = line_admittance(0.0922, 0.0470, BusKind::AC).unwrap();
        assert_relative_eq!(g, 8.6089, max_relative = 1e-4);
        assert_relative_eq!(b, -4.3885, max_relative = 1e-4);
        let denom = 0.0922_f64 * 0.0922 + 0.0470 * 0.0470;
        assert_relative_eq!(g, 0.0922 / denom, max_relative = 1e-14);

        // DC: 1/r regardless of the reactance column.
        let (g, b) = line_admittance(0.8980, 0.7091, BusKind::DC).unwrap();
        assert_relative_eq!(g, 1.1136, max_relative = 1e-4);
        assert_eq!(b, 0.0);

        // Resistive AC limit.
        let (g, b) = line_admittance(2.0, 0.0, BusKind::AC).unwrap();
        assert_relative_eq!(g, 0.5, max_relative = 1e-15);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn admittance_rejects_nonpositive_resistance() {
        assert!(line_admittance(0.0, 1.0, BusKind::AC).is_err());
        assert!(line_admittance(-0.1, 0.0, BusKind::DC).is_err());
    }

    #[test]
    fn per_unit_base_and_line_scaling() {
        let base = PerUnitBase {
            s_base: 1000.0,
            v_base_ac: 12.66,
            v_base_dc: None,
        };
        assert_relative_eq!(base.z_base(BusKind::AC), 160.2756, max_relative = 1e-6);

        let net = parse_network(&two_bus_json()).unwrap();
        let norm = to_per_unit(&net).unwrap();
        assert_relative_eq!(norm.lines[0].r, 5.7526e-4, max_relative = 1e-4);
        assert_relative_eq!(norm.lines[0].pl_max, 4.6, max_relative = 1e-12);
    }

    #[test]
    fn identity_base_keeps_impedances() {
        let mut doc: serde_json::Value = serde_json::from_str(&two_bus_json()).unwrap();
        // z_base = 1^2 * 1000 / 1000 = 1 ohm
        doc["base"] = serde_json::json!({"s_base": 1000.0, "v_base_ac": 1.0});
        let net = parse_network(&doc.to_string()).unwrap();
        let norm = to_per_unit(&net).unwrap();
        assert_relative_eq!(norm.lines[0].r, 0.0922, max_relative = 1e-15);
        assert_relative_eq!(norm.lines[0].x, 0.0470, max_relative = 1e-15);
    }

    #[test]
    fn serialize_parse_round_trip_is_identity() {
        let net = parse_network(&two_bus_json()).unwrap();
        let again = parse_network(&net.to_json()).unwrap();
        assert_eq!(net, again);
    }

    #[test]
    fn single_bus_topology_report() {
        let doc = serde_json::json!({
            "base": {"s_base": 1000.0, "v_base_ac": 1.0},
            "buses": [{"id": "1", "kind": "DC", "v_min": 0.9, "v_max": 1.1, "pcc": true}],
            "lines": []
        });
        let net = parse_network(&doc.to_string()).unwrap();
        let report = validate_topology(&net);
        assert_eq!(report.islands.len(), 1);
        assert!(report.converter_bridges.is_empty());
        assert_eq!(report.pcc_buses, vec!["1"]);
    }
}
