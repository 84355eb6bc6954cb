use std::path::PathBuf;

use thiserror::Error;

/// Error variants shared across the crate.
#[derive(Debug, Error)]
pub enum OtError {
    /// Input dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A domain-type invariant was violated at construction.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// Mathematically out-of-domain input (e.g. log of a nonpositive value).
    #[error("domain error: {0}")]
    Domain(String),

    /// An exponential left the representable range.
    #[error("exp overflow: exponent {exponent} at entry ({row}, {col})")]
    Overflow {
        exponent: f64,
        row: usize,
        col: usize,
    },

    /// A solver finished without reaching its tolerance.
    #[error("solver {solver} failed: {reason}")]
    SolverFailed {
        solver: &'static str,
        reason: String,
    },

    /// Desk-scale guard for the exact oracle.
    #[error("instance too large for the exact oracle: n = {n} exceeds {limit}")]
    TooLarge { n: usize, limit: usize },

    /// Malformed binary or JSON input.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// I/O failure with path context.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl OtError {
    pub fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        OtError::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        OtError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, OtError>;
