use thiserror::Error;

/// Errors produced by the certification toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid walk: {0}")]
    InvalidWalk(String),

    #[error("parse error at position {position}: expected {expected}")]
    Parse { position: usize, expected: String },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("state diverged at t = {t}: |x| = {magnitude:e}")]
    Divergence { t: f64, magnitude: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
