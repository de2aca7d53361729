// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Failure of a CLI run, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or incomplete configuration. Exit code 2.
    #[error("configuration error: {0}")]
    Schema(String),

    /// A computation did not reach its tolerance. Exit code 3.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The pipeline ran but a required check did not pass. Exit code 3.
    #[error("check failed: {0}")]
    CheckFailed(String),

    /// Artifacts could not be written. Exit code 3.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) => 2,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Schema(_) => "schema",
            CliError::Numerical(_) => "numerical",
            CliError::CheckFailed(_) => "check",
            CliError::Io(_) => "io",
        }
    }
}

impl From<gapflow::Error> for CliError {
    fn from(e: gapflow::Error) -> Self {
        if e.is_input_error() {
            CliError::Schema(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
