use thiserror::Error;

use crate::model::ModelCheckpoint;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated a documented precondition (shape mismatch, out-of-range
    /// argument, empty input where nonempty is required, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Numerically degenerate input, e.g. normalizing a near-zero vector.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Invalid generator or training configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Training produced non-finite values. Carries the last usable checkpoint
    /// when one exists so callers can salvage the run.
    #[error("training diverged: {reason}")]
    Diverged {
        reason: String,
        checkpoint: Option<Box<ModelCheckpoint>>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
