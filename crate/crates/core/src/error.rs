use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value out of floating-point range: {0}")]
    OutOfRange(String),

    #[error("index set would hold {requested} members, above the cap of {cap}")]
    SizeCap { requested: u128, cap: usize },

    #[error("index set is not downward closed (missing predecessor of {0:?})")]
    NotDownwardClosed(Vec<usize>),

    #[error("quadrature order {given} is below the required {required}")]
    QuadratureOrder { given: usize, required: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time integration became unstable at step {step} (t = {time:.6e}, |a| = {norm:.3e})")]
    Unstable { step: usize, time: f64, norm: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
