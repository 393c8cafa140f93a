use std::path::PathBuf;

use crate::formats::FormatError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CAPACITY: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: FormatError },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Core(#[from] quasipower_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use quasipower_core::Error as E;
        match self {
            CliError::Core(E::Capacity { .. })
            | CliError::Format(FormatError::Core(E::Capacity { .. }))
            | CliError::Input {
                source: FormatError::Core(E::Capacity { .. }),
                ..
            } => EXIT_CAPACITY,
            _ => EXIT_USAGE,
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
