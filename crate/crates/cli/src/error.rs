use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable inputs, schema violations.
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] trunclap::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) | CliError::Json(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Core(trunclap::Error::InvalidInput(_) | trunclap::Error::DimensionMismatch { .. }) => "invalid_input",
            CliError::Core(trunclap::Error::Precondition(_)) => "precondition",
            CliError::Core(_) => "numerical",
        }
    }

    /// 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.kind() == "usage" {
            2
        } else {
            1
        }
    }
}
