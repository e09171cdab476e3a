//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by constructors and solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Shape or dimension mismatch between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Invalid construction parameters (non-PSD matrix, empty set, …).
    #[error("invalid construction: {0}")]
    Invalid(String),
    /// A structural precondition failed (skewness, coercivity, self-duality, …).
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// An iterative kernel hit its iteration cap without meeting tolerance.
    #[error("not converged: {0}")]
    NotConverged(String),
}

/// Crate-wide result alias.
pub type Result<V> = std::result::Result<V, Error>;
