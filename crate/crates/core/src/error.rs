use thiserror::Error;

use crate::train::EpochRecord;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("singular gradient: residual norm is zero at sample {sample} with p = {p} < 2")]
    SingularGradient { sample: usize, p: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("trace does not belong to the current model parameters ({0})")]
    StaleTrace(String),

    #[error("label {label} out of range for {classes} classes (row {row})")]
    LabelRange {
        row: usize,
        label: usize,
        classes: usize,
    },

    #[error("IDX format error: {0}")]
    Format(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },

    #[error("outside the oracle's range: {0}")]
    OracleRange(String),

    #[error("training diverged at epoch {epoch}")]
    Diverged {
        epoch: usize,
        /// Records of every epoch completed before the divergence.
        records: Vec<EpochRecord>,
    },

    #[error("every grid cell diverged ({cells} cells)")]
    AllCellsDiverged { cells: usize },

    #[error("checksum mismatch for {file}: {detail}")]
    Digest { file: String, detail: String },

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
