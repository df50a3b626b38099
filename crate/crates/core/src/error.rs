use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e}, allowed {allowed:.3e})")]
    NotPsd { min_eig: f64, allowed: f64 },
    #[error("matrix is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("zero vector has no steepest direction")]
    ZeroVector,
    #[error("preconditioner is singular")]
    SingularPreconditioner,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("construction infeasible: {0}")]
    ConstructionInfeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
