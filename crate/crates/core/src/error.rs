use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Negative mathematical verdicts (not a member, not SOS, infeasible) are
/// *not* errors; they are returned as status values by the respective
/// operations. Errors are reserved for malformed input, violated
/// preconditions and unsupported requests.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("map is not completely positive (Choi min eigenvalue {min_eig:.3e})")]
    NotCompletelyPositive { min_eig: f64 },

    #[error("unsupported: {0}")]
    Capability(String),

    #[error("incomplete factorization: {0}")]
    IncompleteFactorization(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("properness violated: {0}")]
    Properness(String),

    #[error("coefficient extraction failed: {0}")]
    Coefficient(String),

    #[error("solver did not reach a verdict: {0}")]
    Solver(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
