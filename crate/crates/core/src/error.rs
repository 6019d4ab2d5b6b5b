//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by map construction, filtering, and scoring.
#[derive(Debug, Error)]
pub enum NmqaError {
    /// A caller violated an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A data-bank file failed to parse; locations are 1-based.
    #[error("format error in {path} (row {row}, column {column}): {message}")]
    Format {
        path: String,
        row: usize,
        column: usize,
        message: String,
    },

    /// Every particle weight collapsed to zero. This aborts the run rather
    /// than silently re-uniformizing: it signals a mis-tuned noise regime.
    #[error("degenerate particle weights: {0}")]
    DegenerateWeights(String),

    /// A site has received neither physical measurements nor messages, so
    /// the map update has nothing to average; callers keep the prior value.
    #[error("no data recorded at site {0}")]
    NoData(usize),

    /// A curve inversion target lies outside the attained score range.
    #[error("target {target} outside attained range [{min}, {max}]")]
    OutOfRange { target: f64, min: f64, max: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NmqaError>;
