use std::fmt;

use entropy_cg::Error;

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    BlowUp(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::BlowUp(_) => 2,
            CliError::Verification(_) => 3,
        }
    }

    pub fn io(what: &str, e: std::io::Error) -> Self {
        CliError::Config(format!("{what}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::BlowUp(m) => write!(f, "simulation failed: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::BlowUp { .. } | Error::NonFinite(_) | Error::SolverDivergence { .. } => {
                CliError::BlowUp(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}
