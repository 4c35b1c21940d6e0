use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error("{0}: {1}")]
    Csv(PathBuf, String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] sgn_core::Error),
}

impl LabError {
    /// Process exit status: 2 for unusable input, 1 for anything that went
    /// wrong while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Csv(..) => 2,
            _ => 1,
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;
