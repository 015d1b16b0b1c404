//! Semi-discrete schemes, time stepping drivers and diagnostics.

mod discretization;
mod mass;
mod run;
mod scheme;

pub use discretization::{Discretization, EntropyBudget, RhsReport, RhsWorkspace};
pub use mass::{MassSolver, MASS_SOLVE_TOLERANCE};
pub use run::{
    cells_for_dofs, eoc_study, eoc_table, run, run_observed, run_problem, DiagnosticRecord, EocRow,
    RunOptions, RunSummary, SimulationResult, BLOW_UP_FACTOR, DEFAULT_CFL,
};
pub use scheme::{SchemeConfig, SchemeVariant};
