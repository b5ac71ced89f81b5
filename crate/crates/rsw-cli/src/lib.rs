//! Experiment driver around the rsw-core library: strict TOML configs in,
//! deterministic CSV/JSON artifacts out.

pub mod config;
pub mod experiment;
pub mod output;

use std::fmt;

/// Driver-level failure, carrying the process exit code convention:
/// 2 config, 3 vacuum, 4 boundary contact, 5 numerical failure, 1 other.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(rsw_core::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(rsw_core::Error::Vacuum(_)) => 3,
            CliError::Core(rsw_core::Error::Numerics(_)) => 5,
            CliError::Core(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<rsw_core::Error> for CliError {
    fn from(e: rsw_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
