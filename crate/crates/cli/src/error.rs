use std::fmt::Display;

use mensura_core::data::DataError;
use mensura_core::regress::RegressError;
use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

fn one_line(e: impl Display) -> String {
    e.to_string().lines().map(str::trim).collect::<Vec<_>>().join(" ")
}

impl CliError {
    pub fn usage(e: impl Display) -> Self {
        CliError::Usage(one_line(e))
    }

    pub fn data(e: impl Display) -> Self {
        CliError::Data(one_line(e))
    }

    pub fn numerical(e: impl Display) -> Self {
        CliError::Numerical(one_line(e))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::data(e)
    }
}

impl From<RegressError> for CliError {
    fn from(e: RegressError) -> Self {
        CliError::numerical(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e)
    }
}
