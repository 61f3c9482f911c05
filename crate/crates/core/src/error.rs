use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("layer {layer}: {message}")]
    Layer { layer: usize, message: String },

    #[error("backward called without a cached forward pass")]
    MissingCache,

    #[error("brute-force search refused: {0}")]
    SearchTooLarge(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("load curve rejected: {0}")]
    InvalidCurve(String),

    #[error("artifact: {0}")]
    Artifact(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable short code used by the CLI error JSON and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid_config",
            Error::Dimension(_) => "dimension",
            Error::Layer { .. } => "layer",
            Error::MissingCache => "missing_cache",
            Error::SearchTooLarge(_) => "search_too_large",
            Error::Infeasible(_) => "infeasible",
            Error::InvalidCurve(_) => "invalid_curve",
            Error::Artifact(_) => "artifact",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidConfig(msg()))
    }
}
