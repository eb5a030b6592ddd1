use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported Daubechies order {0}: valid orders are 1..=7")]
    UnsupportedOrder(usize),

    #[error("unsupported decomposition level {0}: valid levels are 1..=4")]
    UnsupportedLevel(usize),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("signal length {len} is not a multiple of {required} (2^level)")]
    Divisibility { len: usize, required: usize },

    #[error("invalid state: {0}")]
    State(String),

    #[error("day {0} has no previous day to persist")]
    NoHistory(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("log-return domain error at index {index}: value {value} is not positive")]
    Domain { index: usize, value: f64 },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("network error: {0}")]
    Network(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_err(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
