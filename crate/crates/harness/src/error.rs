use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad user input: unknown names, malformed config files, invalid values.
    #[error("config error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Runtime(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Runtime(_) | HarnessError::Io { .. } => 2,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<clbo_core::Error> for HarnessError {
    fn from(e: clbo_core::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
