//! Flux models, entropy pairs and benchmark problems.

mod benchmark;
mod flux;

pub use benchmark::{
    benchmark, BenchmarkProblem, ProblemKind, BENCHMARK_NAMES, BURGERS_CRITICAL_TIME,
};
pub use flux::{FluxKind, FluxModel, ROTATION_ANGULAR_VELOCITY};
