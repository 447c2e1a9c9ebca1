use pipg::PipgError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver {solver} (gamma = {gamma}) failed: {source}")]
    Numeric {
        solver: String,
        gamma: f64,
        #[source]
        source: PipgError,
    },
    #[error("input error: {0}")]
    Input(#[source] PipgError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 1 config, 2 numeric, 3 input/output.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numeric { .. } => 2,
            CliError::Input(_) | CliError::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
