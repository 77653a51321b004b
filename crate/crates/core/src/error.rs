use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("invalid {family} spec: {reason}")]
    InvalidSpec { family: &'static str, reason: String },

    #[error("{family} fit failed: {reason}")]
    Fit { family: &'static str, reason: String },

    #[error("load error at row {row}, column {column}: {reason}")]
    Load { row: usize, column: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("document error: {0}")]
    Document(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn spec(family: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidSpec { family, reason: reason.into() }
    }

    pub(crate) fn fit(family: &'static str, reason: impl Into<String>) -> Self {
        Error::Fit { family, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Document(e.to_string())
    }
}
