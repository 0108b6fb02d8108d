//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by topology, schedule, model, sampler, and harness code.
#[derive(Debug, Error)]
pub enum Error {
    /// Graph construction or use violated a topology requirement.
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A step-size schedule violates a structural requirement of an operation.
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    /// A numeric input (parameter vector, gradient) was not finite.
    #[error("non-finite numeric input: {0}")]
    NumericInput(String),

    /// A chain produced a non-finite coordinate and was aborted.
    #[error("divergence at iteration {iteration}, agent {agent}")]
    Divergence { agent: usize, iteration: u64 },

    /// Text input (sparse data, config) could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Dataset-level constraint violation (empty set, too few rows, ...).
    #[error("data error: {0}")]
    Data(String),

    /// The Theorem-style bound is not defined for the supplied inputs.
    #[error("bound unavailable: {0}")]
    BoundUnavailable(String),

    /// Underlying IO failure, annotated with the path involved.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
