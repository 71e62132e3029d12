use alloc::string::String;

/// Errors produced by the signal-processing chain.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is singular or not positive definite (pivot {pivot})")]
    Singular { pivot: usize },
    #[error("guard boxes of ports {first} and {second} overlap")]
    GuardOverlap { first: usize, second: usize },
    #[error("region too small: {0}")]
    RegionTooSmall(String),
    #[error("invalid configuration `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
