use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid polyline: {0}")]
    InvalidPolyline(String),

    #[error("invalid varifold: {0}")]
    InvalidVarifold(String),

    #[error("face {index} is degenerate (area {area:e} mm^2)")]
    DegenerateFace { index: usize, area: f64 },

    #[error("segment {index} has zero length")]
    DegenerateSegment { index: usize },

    #[error("cylinder truncation removed every face")]
    EmptyTruncation,

    #[error("target representer is not positive at element {index} (value {value:e})")]
    DegenerateTarget { index: usize, value: f64 },

    #[error("element count mismatch: {expected} vs {found}")]
    CountMismatch { expected: usize, found: usize },

    #[error("source element {index} has zero weight")]
    ZeroWeight { index: usize },

    #[error("shooting diverged at step {step}")]
    Divergence { step: usize },

    #[error("grid of {nodes} nodes exceeds the cap of {cap}")]
    GridTooLarge { nodes: usize, cap: usize },

    #[error("landmark labels differ: only in first [{only_a}], only in second [{only_b}]")]
    LabelMismatch { only_a: String, only_b: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
