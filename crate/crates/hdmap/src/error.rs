use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{}: malformed JSON: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {}{field}: {reason}", path.display(), element.map(|i| format!("element {i}: ")).unwrap_or_default())]
    Schema { path: PathBuf, element: Option<usize>, field: &'static str, reason: String },
    #[error("{0}")]
    Usage(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] hdmap_core::Error),
}

impl Error {
    /// Process exit status: 1 for bad input or usage, 2 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Write { .. } | Error::Csv(_) => 2,
            Error::Core(hdmap_core::Error::Diverged { .. } | hdmap_core::Error::NonFinite { .. }) => 2,
            _ => 1,
        }
    }
}
