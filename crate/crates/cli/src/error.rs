use std::path::PathBuf;

use krein_core::SpectralError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error("solver failure: {0}")]
    Solver(SpectralError),
    #[error("exceptional point did not converge: {0}")]
    NoConvergence(SpectralError),
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver(_) | CliError::Io { .. } => 3,
            CliError::NoConvergence(_) => 4,
        }
    }

    /// Refinement failures of an exceptional-point search.
    pub fn from_refinement(e: SpectralError) -> Self {
        match e {
            SpectralError::NoConvergence { .. } | SpectralError::SingularJacobian { .. } => {
                CliError::NoConvergence(e)
            }
            e => e.into(),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::InvalidParameter(msg) => CliError::Usage(msg),
            e => CliError::Solver(e),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
