use std::io;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Label(String),

    /// A nesting tree, span list or arc set that does not describe a
    /// valid binary nesting.
    #[error("{0}")]
    Structure(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    /// Malformed input text, with the 1-based line number when known.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid model file: {0}")]
    Format(String),

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
