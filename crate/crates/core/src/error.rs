use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("vector must be nonzero")]
    ZeroVector,
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {0} exceeds the dense eigensolver limit {1}")]
    TooLarge(usize, usize),
    #[error("unsupported Taylor degree {0} (only 1 and 2 are implemented)")]
    UnsupportedDegree(u32),
    #[error("regularization parameter must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("predicted Taylor decrease {0:e} is too small to form a ratio")]
    DegenerateStep(f64),
    #[error("Hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("inner solver stopped after {} iterations without meeting its termination test", .0.iterations)]
    InnerNotConverged(Box<crate::rqmin::RqminResult>),
    #[error("no termination within {0} outer iterations")]
    MaxOuter(usize),
    #[error("unknown problem {0:?}")]
    UnknownProblem(String),
    #[error("problem {name} does not support dimension {n}")]
    UnsupportedDimension { name: String, n: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
