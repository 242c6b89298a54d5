use thiserror::Error;

/// Failures, split by the exit status they map to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or configuration; exit status 1.
    #[error("config error: {0}")]
    Config(String),
    /// A pipeline stage failed; exit status 2.
    #[error("{stage} failed: {source}")]
    Runtime {
        stage: &'static str,
        #[source]
        source: vfrecon::Error,
    },
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime { .. } | CliError::Output(_) => 2,
        }
    }
}

/// Tags a core error with the stage it came from.
pub(crate) trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for vfrecon::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Runtime { stage, source })
    }
}
