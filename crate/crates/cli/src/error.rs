use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] ruinsim_core::Error),
}

impl CliError {
    /// 1 config or I/O error, 3 hypothesis failure (no root), 4 numerical quality.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(ruinsim_core::Error::NoBeta(_)) => 3,
            CliError::Core(ruinsim_core::Error::Quality(_)) => 4,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}
