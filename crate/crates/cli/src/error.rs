use std::fmt;
use std::io;

use abcboost_core::CoreError;

/// Errors surfaced by the command-line tools and file-format code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    ModelFormat(String),
    Core(CoreError),
    Io(io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Parse {
                path,
                line,
                message,
            } => {
                write!(f, "{path}:{line}: {message}")
            }
            CliError::ModelFormat(msg) => write!(f, "bad model file: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}
