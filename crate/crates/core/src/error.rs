use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("non-finite value {value} at index {index}")]
    NonFiniteValue { index: usize, value: f64 },

    #[error("invalid sigma: {0}")]
    InvalidSigma(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("negative input {value} at index {index}")]
    NegativeInput { index: usize, value: f64 },

    #[error("value {value} at index {index} outside [{lo}, {hi}]")]
    RangeError {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("field too small: {0}")]
    TooSmall(String),

    #[error("curve too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("degenerate curve: maximum is zero")]
    DegenerateCurve,

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: format error at {location}: {message}")]
    Format {
        path: PathBuf,
        location: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the filesystem rather than by data or parameters.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
