use std::path::PathBuf;

/// Errors produced anywhere in the inference pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("node index {index} out of range for a graph with {p} nodes")]
    NodeOutOfRange { index: usize, p: usize },

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("structural matrix is numerically singular")]
    Singular,

    #[error("numerical failure at iteration {iteration}: {message}")]
    Numerical { iteration: usize, message: String },

    #[error("trace contains no retained draws")]
    EmptyTrace,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line surface: 3 for numerical
    /// failure, 2 for everything else (input validation, I/O).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical { .. } | Error::Singular => 3,
            _ => 2,
        }
    }
}
