use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular point: {0}")]
    Singular(String),
    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),
    #[error("singular matrix (condition estimate {cond:.3e})")]
    SingularMatrix { cond: f64 },
    #[error("zero determinant in {0}")]
    ZeroDeterminant(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("gap under-resolved: {cells} cells across the gap, need {required}")]
    UnderResolved { cells: usize, required: usize },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("non-convergent sweep: {0}")]
    NonConvergentSweep(String),
    #[error("non-positive value in fit: {0}")]
    NonPositive(String),
    #[error("missing ratio: {0}")]
    MissingRatio(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
