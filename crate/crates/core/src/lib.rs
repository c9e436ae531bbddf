//! Day-ahead optimal scheduling engine for hybrid AC/DC microgrids.
//!
//! The crate is organized around a pipeline:
//!
//! 1. [`network`] — typed microgrid model (buses, lines, converters, DGs,
//!    storage), JSON ingestion, per-unit normalization, admittance and
//!    topology checks.
//! 2. [`profiles`] — hourly load / price / availability series.
//! 3. [`powerflow`] — linearized branch-flow expressions with an iteratively
//!    updated loss linearization point.
//! 4. [`scheduler`] — assembly of the day-ahead mixed-integer linear program
//!    (unit commitment, storage, converters, network limits) and solution
//!    extraction.
//! 5. [`solver`] — bundled exact MILP solver (bounded revised simplex plus
//!    branch-and-bound) behind a backend trait.
//! 6. [`acpf`] — exact nonlinear power-flow oracle used to measure
//!    linearization error.
//! 7. [`verifier`] — independent constraint-by-constraint certification and
//!    an exhaustive-enumeration optimality oracle for small instances.
//! 8. [`scenario`] — case-study transforms, the end-to-end run pipeline, and
//!    report emission.

pub mod acpf;
pub mod dataset;
pub mod network;
pub mod powerflow;
pub mod profiles;
pub mod scenario;
pub mod scheduler;
pub mod solver;
pub mod testkit;
pub mod verifier;

pub use network::{
    BusKind, BusSpec, ConverterSpec, GeneratorSpec, LineSpec, Network, NetworkError,
    NormalizedNetwork, PerUnitBase, StorageSpec, TopologyReport,
};
pub use powerflow::{FlowExpr, IterationTrace, LinearizationPoint};
pub use profiles::ProfileSet;
pub use scenario::{CaseTransform, RunReport, ScenarioConfig};
pub use scheduler::{MilpModel, Solution, SolveStatus};
pub use solver::{LpProblem, SolveBackend, SolverOptions, SolverOutcome};
pub use verifier::ViolationReport;
