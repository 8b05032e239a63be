use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, kernel files or combinations of options.
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure in stage `{stage}`: {source}")]
    Numeric {
        stage: &'static str,
        #[source]
        source: fredet::Error,
    },
    #[error("{0}")]
    Io(String),
    #[error("numerical failure in stage `identity`: {0}")]
    Identity(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) | CliError::Io(_) => ExitCode::from(1),
            CliError::Numeric { .. } | CliError::Identity(_) => ExitCode::from(2),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches the pipeline stage to a library error.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> CliResult<T>;
}

impl<T> Stage<T> for fredet::Result<T> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError::Numeric { stage, source })
    }
}
