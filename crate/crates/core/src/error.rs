use thiserror::Error;

/// Errors produced by grid construction, sampling, and verification.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("test function is not mean-zero (sum {sum:e}, mass {mass:e})")]
    NotMeanZero { sum: f64, mass: f64 },
    #[error("unsupported parameter range: {0}")]
    UnsupportedRange(String),
    #[error("scale not resolvable on this grid: {0}")]
    Unresolvable(String),
    #[error("support too large: {0}")]
    SupportTooLarge(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("covariance spectrum not positive semidefinite (most negative eigenvalue {min:e}, max {max:e})")]
    NegativeSpectrum { min: f64, max: f64 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("unknown construction `{0}`")]
    UnknownConstruction(String),
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
