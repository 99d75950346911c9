use thiserror::Error;

/// Failures surfaced by the experiment layer.
#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] stubborn_usd_core::Error),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
