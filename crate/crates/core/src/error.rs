use alloc::string::String;

use crate::matrix::Matrix;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("index ({0}, {1}) out of range")]
    IndexOutOfRange(usize, usize),

    #[error("sinkhorn did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: Matrix,
    },

    #[error("matrices are not cross-ratio equivalent (max log residual {residual:e})")]
    NotEquivalent { residual: f64 },

    #[error("coupling has masked entries; this operation needs a complete observation")]
    MaskedInput,

    #[error("invalid chain configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("sample variance is zero; autocorrelation is undefined")]
    UndefinedVariance,
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
