use std::path::PathBuf;
use std::process::ExitCode;

use ptpp_core::ErrorKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] ptpp_core::Error),

    #[error("{0}")]
    Config(String),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn output(path: &std::path::Path, source: impl Into<Box<dyn std::error::Error + Send + Sync>>) -> Self {
        CliError::Output {
            path: path.to_path_buf(),
            source: source.into(),
        }
    }

    /// 2 for configuration problems, 3 for unreadable input, 4 for
    /// failures while processing or writing results.
    pub fn exit_code(&self) -> ExitCode {
        let kind = match self {
            CliError::Core(e) => e.kind(),
            CliError::Config(_) => ErrorKind::Config,
            CliError::Output { .. } => ErrorKind::Processing,
        };
        ExitCode::from(match kind {
            ErrorKind::Config => 2,
            ErrorKind::Parse => 3,
            ErrorKind::Processing => 4,
        })
    }
}
