use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {context} at index {index}")]
    NonFinite { context: &'static str, index: usize },

    #[error("frequency |xi| = {radius} outside the validity region |xi| < {limit} of {model}")]
    OutsideValidity {
        model: &'static str,
        radius: f64,
        limit: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("grid of {points} points needs {bytes} bytes, above the budget of {budget} bytes")]
    MemoryBudget { points: usize, bytes: u128, budget: u128 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("under-resolved: {0}")]
    UnderResolved(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
