//! Command-line driver: configuration, subcommands and output files.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::CliError;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "ENTROPY_CG_THREADS";

/// Worker count from `value` of [`THREADS_ENV`], capped by the available parallelism.
pub fn thread_count(value: Option<&str>, available: usize) -> Result<usize, CliError> {
    match value {
        None => Ok(available),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n.min(available.max(1))),
            _ => Err(CliError::Config(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
    }
}

/// Writes to stdout, ignoring a closed pipe.
pub fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_cap() {
        assert_eq!(thread_count(None, 8).unwrap(), 8);
        assert_eq!(thread_count(Some("2"), 8).unwrap(), 2);
        assert_eq!(thread_count(Some("32"), 8).unwrap(), 8);
        assert!(thread_count(Some("0"), 8).is_err());
        assert!(thread_count(Some("many"), 8).is_err());
    }
}
