//! The `train` and `gridsearch` verbs.

use std::path::{Path, PathBuf};

use anrat::data::{load_mnist_dir, synthetic, Splits};
use anrat::nn::snapshot;
use anrat::report::{self, write_atomic, CSV_SCHEMA_VERSION};
use anrat::train::{grid_search, train, RunResult};
use serde::Serialize;

use crate::config::{DatasetConfig, ExperimentConfig};
use crate::{Failure, Outcome};

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const LAMBDA_TRACE_FILE: &str = "lambda_trace.csv";
pub const SNAPSHOT_FILE: &str = "model.bin";
pub const GRID_FILE: &str = "grid.csv";

/// Contents of `summary.json`. The resolved config makes the run
/// reproducible from its own artifacts.
#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub schema_version: u32,
    pub seed: u64,
    pub config: &'a ExperimentConfig,
    pub parameter_count: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_valid_err: f64,
    /// Test error of the best-validation epoch.
    pub test_error: f64,
    pub best_lambda: f64,
    pub final_lambda: f64,
}

/// Synthetic data is generated from the master seed.
pub fn load_splits(dataset: &DatasetConfig, seed: u64) -> Outcome<Splits> {
    match dataset {
        DatasetConfig::Mnist { path, validation_count } => {
            load_mnist_dir(path, *validation_count).map_err(Failure::data)
        }
        DatasetConfig::Synthetic {
            generator,
            samples,
            validation_count,
            test_count,
        } => {
            let data = synthetic(*generator, *samples, seed)?;
            Ok(Splits::from_tail(&data, *validation_count, *test_count)?)
        }
    }
}

fn check_shape(cfg: &ExperimentConfig, splits: &Splits) -> Outcome {
    let sizes = &cfg.model.sizes;
    let (features, classes) = (splits.train.features(), splits.train.classes());
    if sizes[0] != features || sizes[sizes.len() - 1] != classes {
        return Err(Failure::Config(format!(
            "model.sizes {sizes:?} must start with {features} inputs and end with {classes} classes"
        )));
    }
    Ok(())
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Outcome<PathBuf> {
    let path = dir.join(name);
    write_atomic(&path, bytes).map_err(Failure::data)?;
    Ok(path)
}

/// Writes the per-run artifacts and returns their paths.
pub fn write_run(cfg: &ExperimentConfig, run: &RunResult) -> Outcome<Vec<PathBuf>> {
    let dir = &cfg.output.dir;
    let best = run.best_record();
    let summary = Summary {
        schema_version: CSV_SCHEMA_VERSION,
        seed: cfg.train.seed,
        config: cfg,
        parameter_count: run.best_model.parameter_count(),
        epochs_run: run.records.len(),
        best_epoch: run.best_epoch,
        best_valid_err: best.valid_err,
        test_error: run.test_error,
        best_lambda: run.best_lambda,
        final_lambda: run.final_lambda(),
    };
    let mut paths = vec![write(dir, METRICS_FILE, &report::metrics_csv(&run.records)?)?];
    if cfg.output.lambda_trace {
        paths.push(write(dir, LAMBDA_TRACE_FILE, &report::lambda_trace_csv(&run.lambda_trace)?)?);
    }
    if cfg.output.snapshot {
        paths.push(write(dir, SNAPSHOT_FILE, &snapshot::encode(&run.best_model))?);
    }
    paths.push(write(dir, SUMMARY_FILE, &report::json_bytes(&summary)?)?);
    Ok(paths)
}

/// Trains once. On divergence the metrics of the completed epochs are
/// still written.
pub fn run_train(cfg: &ExperimentConfig) -> Outcome<RunResult> {
    let splits = load_splits(&cfg.dataset, cfg.train.seed)?;
    check_shape(cfg, &splits)?;
    match train(&cfg.model, &splits, &cfg.train) {
        Ok(run) => {
            write_run(cfg, &run)?;
            Ok(run)
        }
        Err(anrat::Error::Diverged { epoch, records }) => {
            write(&cfg.output.dir, METRICS_FILE, &report::metrics_csv(&records)?)?;
            Err(Failure::Divergence(format!(
                "training diverged at epoch {epoch}; metrics of {} completed epochs written",
                records.len()
            )))
        }
        Err(e) => Err(e.into()),
    }
}

/// Runs the `train.lr_grid × train.a_grid` search, writes `grid.csv`, and
/// writes the winning cell's artifacts as [`run_train`] would. The echoed
/// config carries the winner's learning rate and penalty weight.
pub fn run_gridsearch(cfg: &ExperimentConfig) -> Outcome<(usize, RunResult)> {
    let splits = load_splits(&cfg.dataset, cfg.train.seed)?;
    check_shape(cfg, &splits)?;
    let grid = grid_search(&cfg.model, &splits, &cfg.train, &cfg.train.lr_grid, &cfg.train.a_grid)?;
    write(&cfg.output.dir, GRID_FILE, &report::grid_csv(&grid)?)?;
    let cell = &grid.cells[grid.winner];
    let mut winner = cfg.clone();
    winner.train.learning_rate = cell.learning_rate;
    winner.train.loss = winner.train.loss.with_penalty(cell.a)?;
    write_run(&winner, &grid.best)?;
    Ok((grid.winner, grid.best))
}
