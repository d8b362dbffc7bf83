//! Error type shared by every module in the crate.

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text; `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A file exists but its contents do not decode as the expected format.
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    /// Precondition violation on otherwise well-formed data.
    #[error("{0}")]
    Domain(String),

    #[error("shape mismatch in {context}: {left:?} vs {right:?}")]
    Shape {
        context: String,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    /// Records reference grid cells the geometry does not know about.
    #[error("records reference cells missing from the grid: {0:?}")]
    MissingCells(Vec<u64>),

    /// Input data admits no meaningful answer (e.g. all-equal values).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// NaN or infinity showed up inside a numeric kernel.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Error {
        Error::Domain(msg.into())
    }

    pub fn shape(context: impl Into<String>, left: &[usize], right: &[usize]) -> Error {
        Error::Shape {
            context: context.into(),
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }

    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Error {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn format(path: impl AsRef<Path>, message: impl Into<String>) -> Error {
        Error::Format {
            path: path.as_ref().to_path_buf(),
            message: message.into(),
        }
    }

    /// True for failures of the numeric kernels rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
