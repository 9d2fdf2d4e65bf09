use thiserror::Error;

/// Errors raised by geometry, mapping, iteration and rate operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The space does not provide the requested capability.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A descriptor failed validation when it was built.
    #[error("invalid construction: {0}")]
    Construction(String),

    /// An iterate became non-finite.
    #[error("numeric failure at step {step}: {detail}")]
    NumericFailure { step: usize, detail: String },

    /// Configuration could not be parsed or resolved.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, GeoError>;

pub(crate) fn domain(msg: impl Into<String>) -> GeoError {
    GeoError::Domain(msg.into())
}

pub(crate) fn unsupported(msg: impl Into<String>) -> GeoError {
    GeoError::Unsupported(msg.into())
}

pub(crate) fn construction(msg: impl Into<String>) -> GeoError {
    GeoError::Construction(msg.into())
}
