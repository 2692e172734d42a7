use thiserror::Error;

/// Errors produced by the estimation, scoring and analytics routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimensions(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("insufficient structure: {0}")]
    InsufficientStructure(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("{0}")]
    Statistics(String),

    #[error("image decode/encode failed: {0}")]
    Image(#[from] image::ImageError),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
