use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: need {required} samples, have {available}")]
    InsufficientData { required: usize, available: usize },

    #[error("non-finite plant state")]
    NonFiniteState,

    #[error("simulation diverged at t = {t:.6} s")]
    Diverged { t: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("stability boundary not bracketed: lower {lower} (stable: {lower_stable}), upper {upper} (stable: {upper_stable})")]
    NotBracketed {
        lower: f64,
        upper: f64,
        lower_stable: bool,
        upper_stable: bool,
    },

    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
