use rayon::prelude::*;

use super::{train, RunResult, TrainConfig};
use crate::data::Splits;
use crate::error::{Error, Result};
use crate::nn::ModelSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Completed {
        best_epoch: usize,
        best_valid_err: f64,
        test_err: f64,
    },
    Diverged {
        epoch: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub learning_rate: f64,
    pub a: f64,
    pub status: CellStatus,
}

impl GridCell {
    pub fn best_valid_err(&self) -> Option<f64> {
        match self.status {
            CellStatus::Completed { best_valid_err, .. } => Some(best_valid_err),
            CellStatus::Diverged { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridResult {
    /// Learning rate varies slowest, then `a`.
    pub cells: Vec<GridCell>,
    /// Index into `cells` of the selected run.
    pub winner: usize,
    pub best: RunResult,
}

/// One [`train`] run per `(lr, a)` cell; the winner has the lowest
/// best-epoch validation error, earliest cell on ties.
///
/// Every cell trains from the same master seed, so all cells start from the
/// same initial weights and see the same batch order. Objectives that ignore
/// `a` collapse the penalty grid to `base.loss.a`. Cells may run in parallel.
pub fn grid_search(
    spec: &ModelSpec,
    splits: &Splits,
    base: &TrainConfig,
    lr_grid: &[f64],
    a_grid: &[f64],
) -> Result<GridResult> {
    if lr_grid.is_empty() || a_grid.is_empty() {
        return Err(Error::Config("grid search needs nonempty lr and a grids".into()));
    }
    let a_values: Vec<f64> = if base.loss_kind.uses_penalty() {
        a_grid.to_vec()
    } else {
        vec![base.loss.a]
    };
    let mut configs = Vec::with_capacity(lr_grid.len() * a_values.len());
    for &lr in lr_grid {
        for &a in &a_values {
            let cfg = TrainConfig {
                learning_rate: lr,
                loss: base.loss.with_penalty(a)?,
                ..base.clone()
            };
            cfg.validate()?;
            configs.push(cfg);
        }
    }

    let outcomes: Vec<Result<RunResult>> =
        configs.par_iter().map(|cfg| train(spec, splits, cfg)).collect();

    let mut cells = Vec::with_capacity(configs.len());
    let mut best: Option<(usize, RunResult)> = None;
    for (i, (cfg, outcome)) in configs.iter().zip(outcomes).enumerate() {
        let status = match outcome {
            Ok(run) => {
                let rec = run.best_record();
                let status = CellStatus::Completed {
                    best_epoch: run.best_epoch,
                    best_valid_err: rec.valid_err,
                    test_err: run.test_error,
                };
                let better = best
                    .as_ref()
                    .is_none_or(|(_, b)| rec.valid_err < b.best_record().valid_err);
                if better {
                    best = Some((i, run));
                }
                status
            }
            Err(Error::Diverged { epoch, .. }) => CellStatus::Diverged { epoch },
            Err(e) => return Err(e),
        };
        cells.push(GridCell {
            learning_rate: cfg.learning_rate,
            a: cfg.loss.a,
            status,
        });
    }
    let (winner, best) = best.ok_or(Error::AllCellsDiverged { cells: cells.len() })?;
    Ok(GridResult {
        cells,
        winner,
        best,
    })
}
