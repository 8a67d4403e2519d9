//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Scalar argument outside its admissible range, e.g. |S| >= 1.
    #[error("domain error: {0}")]
    Domain(String),

    /// Model parameters violate a precondition (beta <= 0, subcritical mode
    /// where two phases are required, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Array shapes disagree with the grid they are meant to live on.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Kernel not resolvable on the requested grid.
    #[error("kernel resolution error: {0}")]
    Resolution(String),

    /// Custom kernel table contains negative samples.
    #[error("kernel negativity error: {0}")]
    NegativeKernel(String),

    /// Marginal requested along a direction the lattice cannot represent.
    #[error("unsupported direction: {0}")]
    UnsupportedDirection(String),

    /// Space-time window extends outside the grid.
    #[error("window out of range: {0}")]
    WindowOutOfRange(String),

    /// An iterative method failed to reach its tolerance.
    #[error("non-convergence: {0}")]
    NonConvergence(String),

    /// Run configuration failed validation; the message carries the field path.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
