//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter configuration violated its invariants. The message lists
    /// every violation found by [`crate::kernel::validate_config`].
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("node index {index} out of range for {n_v} nodes")]
    IndexOutOfRange { index: usize, n_v: usize },

    #[error("edge indices must be strictly increasing (position {position})")]
    NotStrictlyIncreasing { position: usize },

    #[error("{0}")]
    InvalidArgument(String),

    /// The conditioning set is not contained in the target set.
    #[error("conditioning set is not a subset of the target set")]
    NotSubset,

    #[error("brute-force enumeration refused for {n_v} nodes (limit {limit})")]
    TooManyNodes { n_v: usize, limit: usize },

    /// Symmetric factorization failed; the kernel is not positive definite.
    #[error("kernel matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Model fitting failed on every restart.
    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
