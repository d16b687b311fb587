use thiserror::Error;

use crate::numerics::NumericsError;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] NumericsError),

    /// An argument lies outside the domain of the function being evaluated.
    #[error("domain error: {0}")]
    Domain(String),

    /// The mechanism is in the wrong regime for the requested quantity.
    /// The message names the governing result.
    #[error("regime error: {0}")]
    Regime(String),

    /// Invalid mechanism or run parameters.
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// The Riccati shooting construction failed.
    #[error("riccati solver: {0}")]
    Riccati(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn regime(msg: impl Into<String>) -> Error {
    Error::Regime(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameters(msg.into())
}
