use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("evaluation failed at {point:?}: {source}")]
    Eval { point: Vec<f64>, source: EvalError },
    #[error("expression error: {0}")]
    Expr(#[from] EvalError),
    #[error("metric is not positive definite at {0:?}")]
    NotPositiveDefinite(Vec<f64>),
    #[error("finite-difference stencil leaves the chart domain at {0:?}")]
    StencilOutsideDomain(Vec<f64>),
    #[error("{0} has no symbolic derivatives; use the finite-difference backend")]
    NoSymbolicDerivatives(String),
    #[error("{what} must be positive, found {value} at {point:?}")]
    NonPositive { what: String, value: f64, point: Vec<f64> },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("integration blew up at xi = {xi}: |phi'| = {dphi:e}")]
    BlowUp { xi: f64, dphi: f64 },
    #[error("{0}")]
    OutOfRange(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Invalid(_) | Error::Dimension(_) | Error::NoSymbolicDerivatives(_) | Error::OutOfRange(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn eval_at(point: &[f64], source: EvalError) -> Self {
        Error::Eval { point: point.to_vec(), source }
    }
}
