use std::path::{Path, PathBuf};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] detseg_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: schema error: {message}")]
    Schema { path: String, message: String },

    #[error("{path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("unsupported schema version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("backend transport error: {0}")]
    Transport(String),

    #[error("backend protocol error: {0}")]
    Protocol(String),

    #[error("backend unhealthy: {0}")]
    Unhealthy(String),

    #[error("backend failures {failed} of {attempted} instances exceed the {budget:.0}% budget")]
    FailureBudget {
        failed: u64,
        attempted: u64,
        budget: f64,
    },

    #[error("interrupted; rerun with --resume to continue")]
    Interrupted,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit status: 2 for configuration problems, 1 for everything
    /// else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Version { .. } => 2,
            Error::Core(e) => match e {
                detseg_core::Error::Config(_)
                | detseg_core::Error::UnknownCategory(_)
                | detseg_core::Error::CategoryTable(_) => 2,
                _ => 1,
            },
            _ => 1,
        }
    }

    /// Worth retrying against a remote backend.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Transport(_))
    }
}

/// Read a file to a string, tagging errors with the path.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}
