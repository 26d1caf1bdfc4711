use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid parameters or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Sample or bit counts that do not match the expected frame layout.
    #[error("framing error: {0}")]
    Framing(String),
    /// A measurement that cannot be carried out on the given input.
    #[error("measurement error: {0}")]
    Measurement(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn framing<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Framing(msg.into()))
}

pub(crate) fn measurement<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Measurement(msg.into()))
}
