use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the factorization, rank-selection and reporting code.
#[derive(Debug, Error)]
pub enum Error {
    /// Input could not be parsed in the declared file format.
    #[error("format error: {0}")]
    Format(String),

    /// A value violates the domain of the operation (negative entry, empty mask, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix dimensions do not conform.
    #[error("shape error: {0}")]
    Shape(String),

    /// An argument is outside its allowed range.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
