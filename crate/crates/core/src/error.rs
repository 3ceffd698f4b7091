//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide error.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A matrix or vector argument was singular / degenerate where a
    /// full-rank or strictly positive one is required.
    #[error("singular argument: {0}")]
    SingularArgument(String),

    /// A data file could not be parsed; `row` is 1-based.
    #[error("parse error at row {row}: {message}")]
    ParseError { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn singular(msg: impl Into<String>) -> Self {
        Error::SingularArgument(msg.into())
    }
}
