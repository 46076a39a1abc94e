use jlcm_core::JlcmError;
use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("K={k}: {source}")]
    AtK { k: usize, source: Box<CliError> },
    #[error(transparent)]
    Core(#[from] JlcmError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::AtK { source, .. } => source.category(),
            CliError::Core(e) => e.category(),
            CliError::Io(_) | CliError::Csv(_) => "io",
        }
    }

    pub fn at_k(k: usize) -> impl FnOnce(CliError) -> CliError {
        move |e| CliError::AtK { k, source: Box::new(e) }
    }
}
