use std::path::PathBuf;

/// Errors raised by the doubly ranked testing pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "exact null distribution unsupported for n1={n1}, n2={n2} (combined size exceeds {threshold}); \
         use the normal approximation"
    )]
    UnsupportedSize {
        n1: usize,
        n2: usize,
        threshold: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
