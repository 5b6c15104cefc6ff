use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(
        "equilibrium solve did not converge after {iterations} iterations (residual {residual:e})"
    )]
    SolverFailure { iterations: usize, residual: f64 },

    #[error(
        "Hilbert space of dimension {dim} needs {required_bytes} bytes for dim^2 complex entries, \
         budget is {budget_bytes} bytes"
    )]
    DimensionExceedsBudget {
        dim: usize,
        required_bytes: u128,
        budget_bytes: u128,
    },

    #[error("eigensolver failed on a {dim}x{dim} matrix: {reason}")]
    Eigensolver { dim: usize, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("revival time undefined: {0}")]
    UndefinedRevival(String),

    #[error("no samples inside window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("energy variance {0:e} is negative beyond rounding")]
    NegativeVariance(f64),

    #[error("microcanonical shell is empty: {0}")]
    EmptyShell(String),

    #[error("fit is singular: {0}")]
    SingularFit(String),

    #[error("expectation value {value} at sample {index} lies outside [-1, 1]")]
    OutOfRange { index: usize, value: f64 },
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Resource,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) | Error::DimensionMismatch(_) => ErrorKind::Config,
            Error::DimensionExceedsBudget { .. } => ErrorKind::Resource,
            _ => ErrorKind::Numerical,
        }
    }
}
