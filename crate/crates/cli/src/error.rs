use thiserror::Error;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Numerical(qaoa_lab::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        }
    }
}

impl From<qaoa_lab::Error> for CliError {
    fn from(e: qaoa_lab::Error) -> Self {
        use qaoa_lab::Error as E;
        match e {
            E::InvalidSize(_)
            | E::ParameterMismatch { .. }
            | E::TargetMismatch { .. }
            | E::Capacity { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
