//! Command-line driver for `wht-core`: configuration, verification suites and file
//! formats.

pub mod commands;
pub mod config;
pub mod export;
pub mod suites;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("{0}")]
    Core(wht_core::Error),
}

impl CliError {
    /// Process exit status: 1 for failures, 2 for configuration errors, 3 for
    /// assumption violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Assumption(_) => 3,
            CliError::Io(_) | CliError::Core(_) => 1,
        }
    }
}

impl From<wht_core::Error> for CliError {
    fn from(e: wht_core::Error) -> Self {
        match e {
            wht_core::Error::Assumption(s) => CliError::Assumption(s),
            e => CliError::Core(e),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
