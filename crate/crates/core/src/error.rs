use thiserror::Error;

use crate::dyson::SeriesResult;

/// Errors produced by the propagator engine and its supporting numerics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("domain error ({form}): {reason}")]
    Domain { form: &'static str, reason: String },

    #[error("pole of the gamma function at z = {at} (residue sign {residue_sign:+})")]
    Pole { at: i64, residue_sign: i8 },

    #[error("precision loss: {0}")]
    PrecisionLoss(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("grid too small: {0}")]
    DomainTooSmall(String),

    #[error("tail bound {tail_bound:.3e} still above tolerance {tol:.3e} at N = {order}")]
    ConvergenceBudgetExceeded { order: usize, tail_bound: f64, tol: f64, partial: Box<SeriesResult> },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
