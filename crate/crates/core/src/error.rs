use thiserror::Error;

/// Errors raised by the measure, transport and laboratory routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("invalid grid density: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("first marginals differ: {0}")]
    MarginalMismatch(String),

    #[error("entropic solver did not converge after {iterations} iterations (marginal violation {violation:e})")]
    NonConvergence { iterations: usize, violation: f64 },

    #[error("transport solver failed: {0}")]
    SolverFailure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("functional not supported here: {0}")]
    UnsupportedFunctional(String),

    #[error("conjugate unavailable: {0}")]
    ConjugateUnavailable(String),

    #[error("probe point outside the support: {0}")]
    OutsideSupport(String),

    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    #[error("insufficient padding: {0}")]
    PadInsufficient(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
