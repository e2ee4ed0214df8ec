//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("relaxation weight {w} outside (0, {w_star}]")]
    InvalidWeight { w: f64, w_star: f64 },

    #[error("fixed-point iteration did not converge after {max_iter} iterations (residual {residual:e})")]
    MaxIterations { max_iter: usize, residual: f64 },

    #[error("wrong algorithm for this update: expected {expected}, agent is {actual}")]
    WrongAlgorithm {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("no relaxation estimator attached to this agent")]
    DetachedEstimator,

    #[error("non-finite value written to Q({state},{action}) at update {step}")]
    Divergence {
        state: usize,
        action: usize,
        step: u64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
