//! Error type shared across the crate.

use thiserror::Error;

/// Errors reported by solvers, diagnostics and the experiment harness.
#[derive(Debug, Error)]
pub enum MfeError {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A factorization or solve failed (singular system, loss of positivity).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A configuration file or override could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MfeError>;

impl MfeError {
    /// Process exit code used by the CLI: 1 for config/usage problems,
    /// 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            MfeError::NumericalFailure(_) => 2,
            _ => 1,
        }
    }
}
