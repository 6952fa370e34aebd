//! Run artifacts: CSV tables, JSON documents and atomic file writes.
//!
//! Every CSV starts with a header row. Column sets are versioned by
//! [`CSV_SCHEMA_VERSION`], which run summaries record alongside the data.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::train::{CellStatus, EpochRecord, GridResult};
use crate::verify::{ConvexityScan, LambdaScanSummary};

pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const METRICS_HEADER: [&str; 6] = ["epoch", "train_err", "valid_err", "test_err", "objective", "lambda"];
pub const LAMBDA_TRACE_HEADER: [&str; 2] = ["step", "lambda"];
pub const GRID_HEADER: [&str; 6] = ["lr", "a", "best_valid_err", "test_err", "status", "winner"];
pub const LAMBDA_SCAN_HEADER: [&str; 5] = ["batch", "lambda", "nrae", "lp_error", "minimax_error"];
pub const CONVEXITY_HEADER: [&str; 4] = ["lambda", "psd_fraction", "baseline_fraction", "nrae_psd_fraction"];

/// Writes to a sibling temporary file, then renames it over `path`, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    Ok(result?)
}

fn csv_bytes<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn metrics_csv(records: &[EpochRecord]) -> Result<Vec<u8>> {
    csv_bytes(
        &METRICS_HEADER,
        records
            .iter()
            .map(|r| (r.epoch, r.train_err, r.valid_err, r.test_err, r.objective, r.lambda)),
    )
}

/// Row `step` holds λ after `step` updates; row 0 is the initial value.
pub fn lambda_trace_csv(trace: &[f64]) -> Result<Vec<u8>> {
    csv_bytes(&LAMBDA_TRACE_HEADER, trace.iter().enumerate())
}

pub fn grid_csv(grid: &GridResult) -> Result<Vec<u8>> {
    csv_bytes(
        &GRID_HEADER,
        grid.cells.iter().enumerate().map(|(i, c)| {
            let (valid, test, status) = match c.status {
                CellStatus::Completed {
                    best_valid_err,
                    test_err,
                    ..
                } => (Some(best_valid_err), Some(test_err), "ok".to_string()),
                CellStatus::Diverged { epoch } => (None, None, format!("diverged@{epoch}")),
            };
            (c.learning_rate, c.a, valid, test, status, u8::from(i == grid.winner))
        }),
    )
}

pub fn convexity_csv(scan: &ConvexityScan) -> Result<Vec<u8>> {
    csv_bytes(
        &CONVEXITY_HEADER,
        scan.lambdas.iter().enumerate().map(|(i, l)| {
            (*l, scan.psd_fraction[i], scan.baseline_fraction, scan.nrae_psd_fraction[i])
        }),
    )
}

/// One row per (batch, λ) pair.
pub fn lambda_scan_csv(summary: &LambdaScanSummary) -> Result<Vec<u8>> {
    csv_bytes(
        &LAMBDA_SCAN_HEADER,
        summary.cases.iter().enumerate().flat_map(|(b, c)| {
            summary
                .grid
                .iter()
                .zip(&c.values)
                .map(move |(l, v)| (b, *l, *v, c.lp_error, c.minimax_error))
        }),
    )
}

/// Pretty-printed JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
