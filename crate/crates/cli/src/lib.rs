pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

pub use config::{Command, Diagnostic, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration ({} diagnostics)", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Numeric(#[from] covspde::Error),
}

impl CliError {
    pub fn invalid(path: &str, message: impl Into<String>) -> Self {
        CliError::Invalid(vec![Diagnostic::error(path, message)])
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}
