use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid transmission mode {mode}: {reason}")]
    Mode { mode: String, reason: String },
    #[error("invalid power problem: {0}")]
    Problem(String),
    #[error("nothing to report: {0}")]
    EmptyReport(String),
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
