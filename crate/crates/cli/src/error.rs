use rankinfer::RankError;

/// Failure of a CLI invocation, carrying its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Numerical(_) => 3,
            Self::Data(_) => 4,
        }
    }
}

impl From<RankError> for CliError {
    fn from(e: RankError) -> Self {
        match e {
            RankError::InvalidArgument(_) => Self::Usage(e.to_string()),
            RankError::InvalidInput(_)
            | RankError::Dimension { .. }
            | RankError::InsufficientData { .. }
            | RankError::Io { .. }
            | RankError::Serialization(_) => Self::Data(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
