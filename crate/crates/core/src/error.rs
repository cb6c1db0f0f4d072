use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data is unusable for the requested operation.
    #[error("invalid data: {0}")]
    Data(String),

    /// One or more CSV rows failed validation. Each entry names its row.
    #[error("invalid rows in {path}:\n  {}", .problems.join("\n  "))]
    Rows { path: String, problems: Vec<String> },

    /// A run configuration is invalid; detected before any computation.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical check failed at run time.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors a user fixes by changing arguments or config.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
