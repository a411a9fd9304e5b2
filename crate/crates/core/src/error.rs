use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max |A - A^H| = {deviation:e} exceeds {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("objective matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    ObjectiveNotPsd { min_eig: f64 },

    #[error("quadratic term of {0} is not positive semidefinite")]
    NotConvex(String),

    #[error("instance has no constraints")]
    NoConstraints,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid generator spec `{spec}`: {reason}")]
    InvalidSpec { spec: String, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("convex subproblem failed at iteration {iteration}")]
    SubproblemFailed {
        iteration: usize,
        trace: Box<crate::fpp::IterateTrace>,
    },

    #[error("too many failed runs: {failed} of {total}")]
    TooManyFailures { failed: usize, total: usize },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
