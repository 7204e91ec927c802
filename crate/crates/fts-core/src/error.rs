//! Error type shared by all modules of the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two objects that must live in the same space do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A matrix handed in as a covariance operator fails to be self-adjoint
    /// and non-negative within tolerance.
    #[error("not a valid covariance operator: {reason}")]
    InvalidCovariance { reason: String },

    /// The cyclic Jacobi sweep did not reach the off-diagonal target.
    #[error("eigenvalue iteration failed to converge after {sweeps} sweeps (off-diagonal norm {offdiag:.3e})")]
    EigFailure { sweeps: usize, offdiag: f64 },

    /// Catch-all for invalid scalar/structural arguments; `name` identifies
    /// the offending parameter.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An empirical lag covariance was requested at a lag the path cannot
    /// support.
    #[error("lag {h} out of range for a path of length {n}")]
    LagOutOfRange { h: i64, n: usize },

    /// Lag-covariance collections must cover a symmetric range of lags.
    #[error("lag covariances must cover a symmetric lag range: lag {h} is present but {minus_h} is not")]
    AsymmetricLagRange { h: i64, minus_h: i64 },

    /// Inverse Fourier recovery of a lag requires enough grid points to
    /// integrate the corresponding oscillation exactly.
    #[error("frequency grid too coarse for lag {h}: need at least {required} points, got {got}")]
    GridTooCoarse { h: i64, required: usize, got: usize },

    /// The ARCH squared-process recursion must be a strict contraction in the
    /// mean to admit a stationary solution.
    #[error("ARCH recursion is not contractive: mean-square contraction factor {factor:.6} (must be < 1)")]
    ArchNotContractive { factor: f64 },

    /// Cross-frequency experiments need two genuinely distinct frequencies.
    #[error("cross-frequency run requires distinct grid frequencies, got indices {0} and {1}")]
    EqualFrequencies(i64, i64),

    /// The requested reference spectral density cannot be produced for the
    /// given model (e.g. a closed form for an ARCH process).
    #[error("no {wanted} reference available for model kind `{model}`")]
    UnsupportedReference { wanted: &'static str, model: &'static str },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A structured file (report, spectrum table, path matrix) failed to parse.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Attach a path to a raw I/O error.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
