use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("degenerate neighborhood at point {0}")]
    DegenerateNeighborhood(usize),
    #[error("quadric fit is ill-conditioned at point {0}")]
    FitFailure(usize),
    #[error("no cloud point within {radius} m of the link")]
    NoContact { radius: f64 },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot keep {requested} of {available} kernels")]
    DownsampleOverflow { requested: usize, available: usize },
    #[error("model schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u64, expected: u64 },
    #[error("model file is missing section `{0}`")]
    MissingSection(String),
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error("query cloud yields no usable surface features")]
    NoFeatures,
    #[error("every query kernel has zero weight for link {link}: the model does not match this payload")]
    AllZeroWeights { link: usize },
    #[error("candidate has {got} links but the model has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
