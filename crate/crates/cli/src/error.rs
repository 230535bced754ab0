use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] smoothnet::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        RunError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// 3 for numeric failures, 2 for everything the caller can fix.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;
