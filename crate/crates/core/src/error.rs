use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point cloud has {n} points, need at least {min}")]
    TooFewPoints { n: usize, min: usize },

    #[error("no points")]
    NoPoints,

    #[error("point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error(
        "knn graph is disconnected: component containing point {root} has {size} of {n} points (raise k)"
    )]
    DisconnectedGraph { root: usize, size: usize, n: usize },

    #[error("matrix is already normalized")]
    AlreadyNormalized,

    #[error("matrix must be normalized before this operation")]
    NotNormalized,

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("density ratio a1/a0 = {ratio} is degenerate (need a1 > a0 > 0)")]
    DegenerateDensityRatio { ratio: f64 },

    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("group {group} has {size} points, need at least 2")]
    SmallGroup { group: usize, size: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("degenerate distance matrix: {0}")]
    DegenerateMatrix(String),

    #[error("unknown density preset `{0}` (valid: uniform, clutter(d,lambda), two-level(a0,a1,regions))")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
