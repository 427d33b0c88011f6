use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the classification and optimization pipeline.
#[derive(Debug, Error)]
pub enum HdcError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid number of levels: {0}")]
    InvalidLevels(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("flip budget violates the D/2 row constraint: {0}")]
    ConstraintViolation(String),
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("model file format error: {0}")]
    Format(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HdcError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HdcError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        HdcError::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, HdcError>;
