use thiserror::Error;

/// CLI failures, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<mggp::Error> for CliError {
    fn from(e: mggp::Error) -> Self {
        use mggp::Error::*;
        match e {
            SeriesTooShort { .. }
            | InputCountMismatch { .. }
            | LengthMismatch { .. }
            | InitialConditions { .. } => CliError::Data(e.to_string()),
            SingularMatrix { .. } | Divergence { .. } | Unevaluated(_) => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}
