//! Command-line front end for `shrinkrel`: simulate datasets, estimate
//! system curves, select the shrinkage coefficient and run Monte Carlo
//! scenarios.

pub mod args;
pub mod commands;
pub mod csvio;
pub mod output;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 usage, 2 data or IO, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<shrinkrel::Error> for CliError {
    fn from(e: shrinkrel::Error) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

pub use args::Cli;
pub use commands::run;
