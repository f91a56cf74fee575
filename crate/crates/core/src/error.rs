use std::path::PathBuf;

/// Failures while reading or validating a checkpoint file.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CheckpointError {
    #[error("bad magic bytes (expected HXNC)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    BadVersion(u32),
    #[error("truncated header (declared {declared} bytes, {available} available)")]
    TruncatedHeader { declared: u64, available: u64 },
    #[error("truncated payload (tensor table needs {needed} floats, {available} present)")]
    TruncatedPayload { needed: u64, available: u64 },
    #[error("invalid header JSON: {0}")]
    HeaderJson(String),
    #[error("tensor table inconsistency: {0}")]
    TableMismatch(String),
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("non-finite values produced by `{op}`")]
    NonFinite { op: &'static str },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {msg}", path.display())]
    Image { path: PathBuf, msg: String },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] CheckpointError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn image(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Image {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
