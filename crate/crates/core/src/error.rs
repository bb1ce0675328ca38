use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps these onto exit codes: every variant except
/// [`QchanError::Numerical`] is a usage/validation failure (status 2).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QchanError {
    #[error("capacity exceeded: composite dimension {dim} is above the cap {cap}")]
    Capacity { dim: usize, cap: usize },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("matrix is not positive: eigenvalue {eigenvalue:e} is below -{tolerance:e}")]
    NotPositive { eigenvalue: f64, tolerance: f64 },

    #[error("trace error: trace {trace} differs from 1 by more than {tolerance:e}")]
    Trace { trace: f64, tolerance: f64 },

    #[error("map is not completely positive: certificate eigenvalue {eigenvalue:e}")]
    NotCompletelyPositive { eigenvalue: f64 },

    #[error("structure error: {0}")]
    Structure(String),

    #[error("mode error: {0}")]
    Mode(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, QchanError>;
