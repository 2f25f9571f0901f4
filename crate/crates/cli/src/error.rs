use std::path::PathBuf;

use graph_dmd::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("invalid configuration {path}: {msg}")]
    Config { path: PathBuf, msg: String },

    #[error("{0}")]
    Invalid(String),
}

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Config { .. } | CliError::Invalid(_) => EXIT_VALIDATION,
            CliError::Core(e) => match e {
                Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
                | Error::Format { .. }
                | Error::Parse { .. }
                | Error::UnknownStation { .. } => EXIT_IO,
                Error::NumericalFailure(_) | Error::RankZero(_) | Error::ZeroEigenvalue(_) => EXIT_NUMERICAL,
                _ => EXIT_VALIDATION,
            },
        }
    }
}
