use std::io;
use std::path::Path;

use hlmm_core::error::{Error as CoreError, ErrorClass};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

/// Exit codes, one per failure class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const DIMENSION: i32 = 4;
    pub const NUMERICAL: i32 = 5;
    pub const IO: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Dimension(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("{0}: no association rows to plot")]
    EmptyPlot(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn parse(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.display().to_string(),
            line,
            column,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::EmptyPlot(_) => exit::USAGE,
            CliError::Parse { .. } => exit::PARSE,
            CliError::Dimension(_) => exit::DIMENSION,
            CliError::Io { .. } => exit::IO,
            CliError::Core(e) => match e.class() {
                ErrorClass::Input => exit::USAGE,
                ErrorClass::Dimension => exit::DIMENSION,
                ErrorClass::Numerical => exit::NUMERICAL,
            },
        }
    }
}
