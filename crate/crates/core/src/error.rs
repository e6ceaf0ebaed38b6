use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series too short: need at least {required} samples, have {available}")]
    TooShort { required: usize, available: usize },

    #[error("channel {channel} has zero variance")]
    ZeroVariance { channel: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("not enough admissible neighbors: requested {requested}, available {available}")]
    InsufficientNeighbors { requested: usize, available: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no valid scaling region: {0}")]
    NoScalingRegion(String),

    #[error("singular regression: {0}")]
    Singular(String),

    #[error("rank deficient: data rank {rank} < requested {requested}")]
    RankDeficient { rank: usize, requested: usize },

    #[error("divergence at step {step}: {message}")]
    Divergence { step: usize, message: String },

    #[error("undefined result: {0}")]
    Undefined(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown reference system `{0}`")]
    UnknownSystem(String),

    #[error("no stable region: {0}")]
    NoStableRegion(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
