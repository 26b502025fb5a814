use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("paths are not sampled on the same grid ({left} vs {right} nodes)")]
    GridMismatch { left: usize, right: usize },

    #[error("time {t} is outside the grid span [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("horizon not reached: required {required}, attained {attained}")]
    Horizon { required: f64, attained: f64 },

    #[error("invalid envelope: {0}")]
    Envelope(String),

    #[error("invalid clock: {0}")]
    Clock(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
