use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, PlsError>;

#[derive(Debug, Error)]
pub enum PlsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid group structure: {0}")]
    InvalidGroups(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("projection basis is rank deficient")]
    DegenerateBasis,

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("operation not available for this fit: {0}")]
    Mode(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("chunk {index}: {source}")]
    Chunk {
        index: usize,
        #[source]
        source: Box<PlsError>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PlsError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PlsError::Io { path: path.into(), source }
    }

    pub(crate) fn in_chunk(self, index: usize) -> Self {
        match self {
            e @ PlsError::Chunk { .. } => e,
            e => PlsError::Chunk { index, source: Box::new(e) },
        }
    }
}
