use thiserror::Error;

/// Errors raised while building discretizations or advancing a simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("node index {index} out of range (mesh has {count} nodes)")]
    NodeOutOfRange { index: usize, count: usize },

    #[error("quadrature exactness {0} exceeds the supported maximum")]
    QuadratureTooLarge(usize),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("inconsistent subcell right-hand side: row sum {sum:.3e} exceeds tolerance {tol:.3e}")]
    InconsistentPotentialRhs { sum: f64, tol: f64 },

    #[error("unknown benchmark problem '{0}'")]
    UnknownProblem(String),

    #[error("invalid scheme '{0}'")]
    InvalidScheme(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("exact solution unavailable: {0}")]
    NoExactSolution(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("solution blew up at t = {time:.6e}: |u| reached {magnitude:.3e}")]
    BlowUp { time: f64, magnitude: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
