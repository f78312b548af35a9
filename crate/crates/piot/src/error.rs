use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: u64, msg: String },
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] piot_core::Error),
    #[error("writing output: {0}")]
    Output(#[from] io::Error),
    #[error("encoding json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 1 for numerical failures, 2 for bad input or configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(piot_core::Error::NotConverged { .. }) | Self::Core(piot_core::Error::UndefinedVariance) => 1,
            Self::Output(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
