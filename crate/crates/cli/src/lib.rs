//! Experiment harness behind the `gridgp` binary.
//!
//! Each subcommand draws replicated GP samples under a serialized
//! configuration and emits CSV with the full config echoed in '#' comment
//! lines. Everything except the wall-clock columns is byte-identical across
//! reruns of the same configuration.

pub mod config;
pub mod experiments;
pub mod output;

use std::fmt;

/// Harness-level error with the process exit code it maps to: 2 for
/// configuration problems, 3 for numerical failures.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<gridgp::Error> for CliError {
    fn from(e: gridgp::Error) -> Self {
        match e {
            gridgp::Error::InvalidParameter(_)
            | gridgp::Error::DimensionMismatch { .. }
            | gridgp::Error::LevelBelowDimension { .. } => CliError::Config(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(format!("i/o failure: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
