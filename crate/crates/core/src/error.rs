use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({row}, {col}) out of range for a {n_rows}x{n_cols} matrix")]
    Index {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("dense allocation of {bytes} bytes exceeds the cap of {cap} bytes")]
    Capacity { bytes: usize, cap: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid matrix structure: {0}")]
    Structure(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid projection: {0}")]
    InvalidProjection(String),
    #[error("impurity of an empty partition is undefined")]
    EmptyPartition,
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("leaf {0} is not reached by any relabelling sample")]
    Relabel(usize),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("step size must be positive, got {0}")]
    InvalidStep(f64),
    #[error("cannot make {folds} folds out of {n} samples")]
    InvalidFolds { folds: usize, n: usize },
    #[error("t = {t} lies outside the computed path [0, {max}]")]
    InvalidT { t: f64, max: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
