use std::path::Path;

/// Failure of a command, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad or unresolvable configuration; exit code 2.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(mial_core::Error),

    #[error("{failed} of {total} runs failed; first error: {first}")]
    RunsFailed {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("service error: {0}")]
    Service(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            context: path.display().to_string(),
            source,
        }
    }
}

impl From<mial_core::Error> for CliError {
    fn from(e: mial_core::Error) -> Self {
        match e {
            mial_core::Error::InvalidConfig(msg) => CliError::Config(msg),
            other => CliError::Core(other),
        }
    }
}
