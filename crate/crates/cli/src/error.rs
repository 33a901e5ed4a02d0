use std::path::PathBuf;

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] fourws_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
}

impl CliError {
    /// Process exit status: 2 for rejected input, 3 for a run that
    /// aborted, 1 for I/O trouble.
    pub fn exit_code(&self) -> i32 {
        use fourws_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Model(e) => match e {
                E::Aborted { .. }
                | E::SteeringGuard { .. }
                | E::Singularity(_)
                | E::AmbiguousProjection { .. }
                | E::OutOfRange { .. } => 3,
                _ => 2,
            },
            CliError::Io { .. } | CliError::Csv(_) => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Csv(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
