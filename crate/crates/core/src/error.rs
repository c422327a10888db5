use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum PtmError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The (feedback case, automaton action) pair is marked NA in the
    /// feedback table and can never occur in a consistent machine.
    #[error("feedback case {case} is not applicable to a TA in the {action} action")]
    InvalidCase { case: String, action: &'static str },

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("stratified split: {0}")]
    Stratification(String),

    #[error("corrupt model: {0}")]
    CorruptModel(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, PtmError>;

impl PtmError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        PtmError::InvalidParameter(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        PtmError::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PtmError::Io {
            path: path.into(),
            source,
        }
    }
}
