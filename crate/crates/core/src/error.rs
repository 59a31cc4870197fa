use thiserror::Error;

/// Errors raised by fitting, calibration and inference routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel specification: {0}")]
    InvalidKernel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("linear system is numerically singular (smallest eigenvalue {min_eigenvalue:e})")]
    Singular { min_eigenvalue: f64 },

    #[error("duplicate sample locations at indices {0} and {1}; Gram matrix is singular")]
    DuplicateSamples(usize, usize),

    #[error("matrix is not positive definite after jitter: {0}")]
    NotPositiveDefinite(String),

    #[error("V is not invertible (curvature condition fails at the estimate): {0}")]
    SingularCurvature(String),

    #[error("inference requires a model that is smooth in theta")]
    NonSmoothModel,

    #[error("all objective evaluations were non-finite")]
    NoFiniteObjective,

    #[error("degenerate effective degrees of freedom: n - tr(A) = {0:e}")]
    DegenerateDof(f64),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error("{method}: {failures} of {total} replications failed (first error: {first_error})")]
    TooManyFailures {
        method: String,
        failures: usize,
        total: usize,
        first_error: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 1 for input/config problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Config(_)
            | Error::Io(_)
            | Error::InvalidKernel(_)
            | Error::InvalidArgument(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
