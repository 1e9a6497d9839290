use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed WAV file: {0}")]
    Format(String),

    #[error("unsupported WAV encoding: {0}")]
    UnsupportedFormat(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input too short: {0}")]
    TooShort(String),

    #[error("trajectory has no voiced frames")]
    NoVoicedFrames,

    #[error("singular system: {0}")]
    Singular(String),

    #[error("curves are defined on different bases")]
    BasisMismatch,

    #[error("no donor curves: {0}")]
    EmptyDonorSet(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("silent input: {0}")]
    Silent(String),

    #[error("signal lengths differ by {difference} samples (tolerance {tolerance})")]
    LengthMismatch { difference: usize, tolerance: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
