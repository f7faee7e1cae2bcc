use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across map construction, planning and benchmarking.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),
    #[error("elevation volume holds no surfels")]
    EmptyVolume,
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("voxel size must be positive, got {0}")]
    NonPositiveVoxelSize(f64),
    #[error("plane fit needs at least 3 points, got {0}")]
    InsufficientPoints(usize),
    #[error("degenerate geometry: every sampled triple is collinear")]
    DegenerateGeometry,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("neighborhood is empty")]
    EmptyNeighborhood,
    #[error("all cost weights are zero")]
    AllZeroWeights,
    #[error("no traversable surfels")]
    NoTraversableSurfels,
    #[error("OffSurface: no surfel within {radius} m of ({x}, {y})")]
    OffSurface { x: f64, y: f64, radius: f64 },
    #[error("no valid samples: volume has no traversable surfels")]
    NoValidSamples,
    #[error("invalid path state at index {0}")]
    InvalidPathState(usize),
    #[error("invalid {which} state: {reason}")]
    InvalidStartOrGoal { which: &'static str, reason: String },
    #[error("unsatisfiable problem spec: {0}")]
    UnsatisfiableSpec(String),
    #[error("benchmark needs at least one planner config")]
    EmptyConfigList,
    #[error("benchmark needs at least one problem")]
    EmptyProblemList,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
