use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |a - a^dagger| entry = {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue = {0:e})")]
    NotPsd(f64),

    #[error("eigensolver failed: {0}")]
    EigenSolver(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("theta = {0} is outside (0, pi/4]")]
    InvalidTheta(f64),

    #[error("sharpness gamma = {0} is outside (0, 1]")]
    InvalidGamma(f64),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("expectation value has imaginary residue {0:e}")]
    ImaginaryResidue(f64),

    #[error("state invariant broken before observer {observer}: {detail}")]
    ChannelViolation { observer: usize, detail: String },

    #[error("{0}")]
    SearchFailed(String),
}
