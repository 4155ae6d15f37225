use std::path::PathBuf;

use thiserror::Error;

use nlwg::analysis::AnalysisError;
use nlwg::design::DesignError;
use nlwg::stack::StackError;
use nlwg::surrogate::SurrogateError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration; exit status 2.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Stack(#[from] StackError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Surrogate(SurrogateError::Config(_)) => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
