use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("state error: {0}")]
    State(String),

    #[error("optimizer step failed: non-finite gradient in parameter `{param}`")]
    NonFiniteGradient { param: String },

    #[error("non-finite training loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("PGM parse error at byte {offset}: {message}")]
    Pgm { offset: usize, message: String },

    #[error("manifest error (line {line}): {message}")]
    Manifest { line: usize, message: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(#[from] CheckpointError),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Typed checkpoint load failures.
#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic bytes {0:?} (expected \"CVFG\")")]
    BadMagic([u8; 4]),

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("file truncated at byte {offset} while reading {what}")]
    Truncated { offset: usize, what: &'static str },

    #[error("malformed header: {0}")]
    Header(String),

    #[error("tensor `{name}`: {message}")]
    Tensor { name: String, message: String },

    #[error("payload digest mismatch (file corrupted)")]
    Digest,

    #[error("{0} trailing bytes after last tensor")]
    TrailingBytes(usize),

    #[error("tensor `{name}` has shape {found:?}, header implies {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn pgm(offset: usize, message: impl Into<String>) -> Self {
        Error::Pgm {
            offset,
            message: message.into(),
        }
    }
}
