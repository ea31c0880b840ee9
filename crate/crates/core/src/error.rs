//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a documented precondition (resolution too small,
    /// exponent out of range, negative data, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two values that must live on the same grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A query point lies outside the computational domain.
    #[error("point outside domain: {0}")]
    OutOfDomain(String),

    /// A ball query found no grid nodes to operate on.
    #[error("empty ball: {0}")]
    EmptyBall(String),

    /// A configuration document failed validation; `path` names the offending field.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
