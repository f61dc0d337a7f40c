use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] tabml_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Artifact(String),
    #[error("{0} job(s) failed")]
    JobsFailed(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Core(e) if is_config_like(e) => 2,
            Error::JobsFailed(_) => 3,
            _ => 1,
        }
    }
}

fn is_config_like(e: &tabml_core::Error) -> bool {
    matches!(e, tabml_core::Error::Config(_) | tabml_core::Error::UnknownFeatures(_) | tabml_core::Error::MissingFeatures(_) | tabml_core::Error::Hyperparameter { .. })
}
