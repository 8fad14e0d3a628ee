//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at record {record}: {message}")]
    Parse {
        path: PathBuf,
        record: usize,
        message: String,
    },

    #[error("unknown semantic label id {label} at record {record} of {path}")]
    UnknownLabel {
        path: PathBuf,
        record: usize,
        label: u16,
    },

    #[error("empty trajectory: {path}")]
    EmptyTrajectory { path: PathBuf },

    #[error("operation requires a non-empty object")]
    EmptyObject,

    #[error("empty scene graph: map has no objects")]
    EmptyGraph,

    #[error("pixel ({u}, {v}) outside {width}x{height} raster")]
    PixelOutOfRange {
        u: i64,
        v: i64,
        width: u32,
        height: u32,
    },

    #[error("metric undefined on empty input")]
    EmptyMetric,

    #[error("dataset integrity error: {0}")]
    Integrity(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
