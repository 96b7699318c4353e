use std::path::PathBuf;

use hamforge::HfError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    /// Bad command line, already reported by the parser.
    #[error("invalid arguments")]
    Usage,
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("simulation guard: {0}")]
    Guard(String),
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 input, 3 verification, 4 simulation guard.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Usage | CliError::Io { .. } => 2,
            CliError::Verification(_) => 3,
            CliError::Guard(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<HfError> for CliError {
    fn from(e: HfError) -> Self {
        match e {
            HfError::SizeGuard { .. } => CliError::Guard(e.to_string()),
            HfError::Verification(_)
            | HfError::Synthesis(_)
            | HfError::NonClifford(_)
            | HfError::UnmatchedToffoli(_)
            | HfError::InvalidGate(_)
            | HfError::AncillaBudget { .. } => CliError::Verification(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
