use thiserror::Error;

/// Errors produced by the q-series evaluators and operator constructions.
#[derive(Debug, Error)]
pub enum QError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole error: {0}")]
    Pole(String),

    #[error("series did not converge within {max_terms} terms")]
    Divergence { max_terms: usize },

    #[error("negative radicand: {0}")]
    NegativeRadicand(String),

    #[error("operation not representable in the exact backend: {0}")]
    ExactUnsupported(String),

    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error("q -> 1 extrapolation did not converge: {0}")]
    LimitFailure(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, QError>;
