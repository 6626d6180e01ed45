//! Error type shared across the crate.

use thiserror::Error;

use crate::ceml::TrainReport;

/// Crate-wide error type.
///
/// Variants are grouped by how callers are expected to react: malformed
/// inputs, violated numerical preconditions, and optimizer divergence.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: wrong shape, non-finite values, sum mismatch, bad parse.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two operands that must agree in dimension do not.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A configuration value is out of its admissible range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A matrix required to be positive semidefinite has a genuinely
    /// negative eigenvalue (below the clamping tolerance).
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    /// An elementwise logarithm or fractional Hadamard power was requested
    /// on a matrix with a nonpositive entry.
    #[error("nonpositive entry at ({row},{col}): {value:.3e}")]
    NonPositiveEntry { row: usize, col: usize, value: f64 },

    /// A numerical precondition stated by an operation contract is violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A quantity needed for normalization is numerically zero.
    #[error("degenerate value: {0}")]
    Degenerate(String),

    /// A distance matrix does not embed into Euclidean space.
    #[error("not a Hilbertian metric: centered Gram min eigenvalue {min_eigenvalue:.3e}")]
    NotHilbertian { min_eigenvalue: f64 },

    /// Training produced a non-finite objective; the report collected so
    /// far is attached.
    #[error("training diverged at iteration {}", report.iterations_run)]
    Divergence { report: Box<TrainReport> },

    /// File I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
