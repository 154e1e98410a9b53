use std::path::{Path, PathBuf};

use longevity_core::Error as CoreError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_DEGENERATE: i32 = 5;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: CoreError },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn input(path: &Path, source: CoreError) -> Self {
        match source {
            CoreError::Io(e) => CliError::io(path, e),
            other => CliError::Input {
                path: path.to_path_buf(),
                source: other,
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Config(_) => EXIT_VALIDATION,
            CliError::Input { source, .. } | CliError::Core(source) => core_code(source),
        }
    }
}

fn core_code(e: &CoreError) -> i32 {
    match e {
        CoreError::Io(_) => EXIT_IO,
        CoreError::Degenerate(_) => EXIT_DEGENERATE,
        _ => EXIT_VALIDATION,
    }
}
