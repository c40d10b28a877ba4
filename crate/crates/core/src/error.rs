use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: missing column {column:?}")]
    MissingColumn { path: PathBuf, column: String },

    /// Row-level CSV problem; `line` is 1-based and counts the header.
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("duplicate date {date} (line {line})")]
    DuplicateDate { date: String, line: u64 },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("series too short: need at least {needed} records, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("label {value} at position {position} is not binary")]
    NonBinaryLabel { position: usize, value: u8 },

    #[error("feature row has {got} entries, expected {expected}")]
    FeatureLength { expected: usize, got: usize },

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("training diverged at epoch {epoch}: loss is {loss} (try a smaller learning rate)")]
    Diverged { epoch: usize, loss: f64 },

    #[error("non-positive denominator {0} in correlation formula")]
    Denominator(f64),

    #[error("time {time} is not on the simulation grid (dt = {dt})")]
    OffGrid { time: f64, dt: f64 },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("bad binary ensemble file: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
