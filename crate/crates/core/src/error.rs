use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series did not converge within {terms} terms")]
    NonConvergence { terms: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("problem does not supply the total derivative of order {order}")]
    MissingDerivative { order: usize },

    #[error("singular innovation variance (P11 + R = 0)")]
    SingularInnovation,

    #[error("horizon {horizon} is not an integer multiple of step {step}")]
    NonIntegerMesh { horizon: f64, step: f64 },

    #[error("vector field returned a non-finite value at t = {t}")]
    DivergedEvaluation { t: f64 },

    #[error("problem has no closed-form solution")]
    MissingExact,

    #[error("reference solution not converged: Richardson estimate {estimate:e}")]
    OracleNotConverged { estimate: f64 },

    #[error("grid too small: {0}")]
    InsufficientGrid(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("all errors are exactly zero")]
    ExactZero,
}

pub type Result<T, E = FilterError> = std::result::Result<T, E>;
