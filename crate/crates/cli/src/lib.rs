//! Config-driven runs of the pseudomode engine.
//!
//! Each subcommand loads a [`config::RunConfig`], rebuilds and validates
//! every engine type through [`config::Model`], and writes its outputs into
//! the configured directory. Failures carry a [`CliError`] whose
//! [`CliError::exit_code`] is the process status.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

use pseudomode::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// At least one validation check failed (exit 1).
    #[error("{0}")]
    Check(String),
    /// Unreadable, malformed or inconsistent configuration, or a request the
    /// engine refuses (exit 2).
    #[error("config error: {0}")]
    Config(String),
    /// The two-mode rotation is unavailable or infeasible (exit 3).
    #[error("{0}")]
    Regularization(String),
    /// The Fock truncation guard aborted an evolution (exit 4).
    #[error("{0}")]
    Truncation(String),
    /// Output could not be written (exit 2).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Regularization(_) => 3,
            CliError::Truncation(_) => 4,
        }
    }

    /// Routes an engine error to its exit class.
    pub fn from_engine(e: Error) -> Self {
        match e {
            Error::UnsupportedRegularization { .. }
            | Error::SingularRotation { .. }
            | Error::PositivityViolation { .. }
            | Error::Infeasible(_) => CliError::Regularization(e.to_string()),
            Error::TruncationGuard { .. } => CliError::Truncation(e.to_string()),
            Error::InvariantViolation { .. } | Error::StepUnderflow { .. } => CliError::Check(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }

    /// Like [`CliError::from_engine`], for errors raised while building the
    /// rotated model. Structural refusals there (a non-uniform coupling
    /// ratio) are regularization failures too.
    pub fn from_regularization(e: Error) -> Self {
        match e {
            Error::Structural(_) => CliError::Regularization(e.to_string()),
            other => Self::from_engine(other),
        }
    }

    pub(crate) fn config(e: Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
