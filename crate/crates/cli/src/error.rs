use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    InvalidArgument(String),
    #[error("{0}")]
    SearchFailed(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0} self-check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidArgument(_) => 2,
            CliError::SearchFailed(_) => 3,
            CliError::Io(_) => 4,
            CliError::Numerical(_) | CliError::ChecksFailed(_) => 1,
        }
    }
}

impl From<cascade_core::Error> for CliError {
    fn from(e: cascade_core::Error) -> Self {
        use cascade_core::Error as E;
        match e {
            E::SearchFailed(msg) => CliError::SearchFailed(msg),
            E::DimensionMismatch(_)
            | E::InvalidState(_)
            | E::InvalidTheta(_)
            | E::InvalidGamma(_)
            | E::InvalidMeasurement(_)
            | E::InvalidConfig(_) => CliError::InvalidArgument(e.to_string()),
            E::NotHermitian(_) | E::NotPsd(_) | E::EigenSolver(_) | E::ImaginaryResidue(_) | E::ChannelViolation { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
