use std::path::PathBuf;

/// Errors surfaced by the library. Each variant maps onto one process exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad parameters or configuration supplied by the caller.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o failure at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failure: {0}")]
    Serde(#[from] serde_json::Error),

    /// A numerical invariant (norm, finiteness, range) was broken during a run.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration problems, 3 for I/O, 4 for internal invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Serde(_) => 2,
            Error::Io { .. } => 3,
            Error::Invariant(_) => 4,
        }
    }
}

/// Rejects non-finite or out-of-range scalar inputs with a readable message.
pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
