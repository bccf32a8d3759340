//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by field arithmetic, operator contracts and file I/O.
#[derive(Debug, Error)]
pub enum SaltError {
    /// Two fields with incompatible dimensions were combined.
    #[error("dimension mismatch: expected N={expected}, got N={got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A derivative axis outside 1..=N was requested.
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    /// A Sobolev order outside the supported range was requested.
    #[error("unsupported Sobolev order m={m} (supported: {max} and below)")]
    UnsupportedOrder { m: usize, max: usize },

    /// An operator defined only on divergence-free fields received
    /// a field with nonzero divergence.
    #[error("contract violation: input is not divergence-free (max |k.f_k| = {max_residual:.3e})")]
    NotDivergenceFree { max_residual: f64 },

    /// An operator defined only on zero-average fields received a field
    /// with a nonzero mean mode.
    #[error("contract violation: input has nonzero mean mode (|f_0| = {magnitude:.3e})")]
    NonZeroMean { magnitude: f64 },

    /// Generic argument validation failure.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A state vector contained NaN or infinity.
    #[error("non-finite value encountered: {context}")]
    NonFinite { context: String },

    /// A snapshot or path file failed validation on load.
    #[error("file format violation: {0}")]
    FormatViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SaltError>;
