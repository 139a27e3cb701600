//! Command-line front end for `heatflow`: generation, heat evolution,
//! rooting and comparison with the limit laws.

pub mod commands;
pub mod config;
pub mod suite;
pub mod svg;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("root solver did not converge for {0} roots")]
    NonConvergence(usize),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    /// 1 for configuration and i/o problems, 2 for solver failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BadConfig(_) | CliError::Io(_) => 1,
            CliError::NonConvergence(_) => 2,
        }
    }
}

/// Exit code of a `check` run with failures.
pub const EXIT_CHECKS_FAILED: i32 = 3;
