//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by model construction, sampling and estimation.
#[derive(Debug, Error)]
pub enum Error {
    /// Dimensions of vectors, operators or spaces do not line up.
    #[error("dimension mismatch: {0}")]
    Structural(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A rejection sampler ran out of trials.
    #[error("sampling error: {message} (accepted {accepted} of {trials} trials)")]
    Sampling {
        message: String,
        trials: u64,
        accepted: u64,
    },

    /// A model or run configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// An estimator received degenerate input.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// A caller-supplied functional broke its documented contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Malformed text input (CSV, event specifications).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
