use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent configuration (model shape, driver settings).
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller passed an argument outside its documented domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Input data could not be read or does not match the expected shape.
    #[error("data error: {0}")]
    Data(String),

    #[error("failed to load {path}: {reason}")]
    Load { path: PathBuf, reason: String },

    /// Brute-force enumeration was asked for more features than it supports.
    #[error("exact Shapley enumeration supports at most {max} features, got {d}")]
    OracleScale { d: usize, max: usize },

    #[error("estimator produced a non-finite value for feature {feature}: {value}")]
    EstimatorFailure { feature: usize, value: f64 },

    #[error("regression system is singular after resampling coalitions")]
    DegenerateSample,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
