//! Error type shared across the crate.

use std::path::PathBuf;

use crate::optimize::OptimizationTrace;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A tap vector failed structural validation (empty, non-finite, even
    /// length where odd is required, zero energy, ...).
    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    /// A scalar parameter is outside its documented range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Two filters cannot be combined (sample-rate or alignment mismatch).
    #[error("incompatible filters: {0}")]
    IncompatibleFilters(String),

    /// Configuration file failed validation after parsing. `path` is the
    /// JSON field path of the offending value.
    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    /// JSON syntax error; serde_json reports line and column.
    #[error("json parse error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The optimizer could not make progress after exhausting step-size
    /// reductions on non-finite objective values. The partial trace is
    /// attached for diagnosis.
    #[error("optimization failed: {reason}")]
    Optimization {
        reason: String,
        trace: Box<OptimizationTrace>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
