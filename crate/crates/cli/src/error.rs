use thiserror::Error;

/// Failure of a command, carrying the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Inconsistent or invalid flags. Exit code 2.
    #[error("usage: {0}")]
    Usage(String),

    /// The input violates an estimator or pipeline requirement. Exit code 3.
    #[error("{0}")]
    Precondition(String),

    /// Reading or writing a file failed, or a file is malformed. Exit code 4.
    #[error("{0}")]
    Io(String),

    /// Two images that must agree in size do not. Exit code 5.
    #[error("{0}")]
    Dimension(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Io(_) => 4,
            CliError::Dimension(_) => 5,
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<myriad::Error> for CliError {
    fn from(e: myriad::Error) -> Self {
        match e {
            myriad::Error::DimensionMismatch(..) => CliError::Dimension(e.to_string()),
            myriad::Error::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
