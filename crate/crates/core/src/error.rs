use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument fell outside its domain.
    #[error("invalid parameter `{name}`: {message}")]
    Parameter { name: &'static str, message: String },

    /// Malformed or inconsistent file / image layout.
    #[error("format error: {0}")]
    Format(String),

    /// Allocation of a large buffer failed.
    #[error("resource error: {0}")]
    Resource(String),

    #[error(transparent)]
    Config(#[from] crate::scene::ConfigError),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            message: message.into(),
        }
    }
}

impl From<png::EncodingError> for Error {
    fn from(err: png::EncodingError) -> Self {
        match err {
            png::EncodingError::IoError(e) => Error::Io(e),
            other => Error::Format(other.to_string()),
        }
    }
}

impl From<png::DecodingError> for Error {
    fn from(err: png::DecodingError) -> Self {
        match err {
            png::DecodingError::IoError(e) => Error::Io(e),
            other => Error::Format(other.to_string()),
        }
    }
}
