//! Mini-batch SGD on the network weights and, for ANRAT, on λ.
//!
//! Four objectives share one loop:
//!
//! | kind     | objective on softmax outputs `f`, one-hot `y`       | λ            |
//! |----------|-----------------------------------------------------|--------------|
//! | `anrat`  | `NRAE(e) + a λ^(−r)`                                | learned      |
//! | `mse`    | `(1/m) Σ ‖f_i − y_i‖²`                              | unused       |
//! | `ce`     | `−(1/m) Σ log f_{i, y_i}`                           | unused       |
//! | `gdc`    | `NRAE(e)` at `λ = max(λ_min, λ0 · decay^epoch)`     | scheduled    |
//!
//! Each epoch visits the training set once in an order drawn from the
//! master seed and the epoch number. The model with the lowest validation
//! error (earliest on ties) is kept, and its test error is the one reported.

mod grid;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use grid::{grid_search, CellStatus, GridCell, GridResult};

use crate::data::{Dataset, Splits};
use crate::error::{Error, Result};
use crate::loss::{self, ConvexityIndex, LossConfig, DEFAULT_LAMBDA_MIN};
use crate::nn::{argmax, init_model, one_hot, Activation, MlpModel, ModelSpec};

/// Learning-rate grid used for model selection.
pub const DEFAULT_LR_GRID: [f64; 3] = [1.0, 0.5, 0.1];
/// Penalty-weight grid used for model selection.
pub const DEFAULT_A_GRID: [f64; 3] = [1.0, 0.1, 0.001];

/// Rows per chunk when evaluating whole splits.
const EVAL_CHUNK: usize = 2000;
/// Keeps the shuffle stream independent of the initialization stream.
const SHUFFLE_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Anrat,
    Mse,
    #[serde(rename = "ce")]
    CrossEntropy,
    Gdc,
}

impl LossKind {
    /// Whether the penalty weight `a` affects this objective.
    pub fn uses_penalty(self) -> bool {
        self == LossKind::Anrat
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Anrat => "anrat",
            LossKind::Mse => "mse",
            LossKind::CrossEntropy => "ce",
            LossKind::Gdc => "gdc",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "anrat" => Ok(LossKind::Anrat),
            "mse" => Ok(LossKind::Mse),
            "ce" | "cross-entropy" | "crossentropy" => Ok(LossKind::CrossEntropy),
            "gdc" => Ok(LossKind::Gdc),
            other => Err(Error::Config(format!("unknown loss kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Defaults to `learning_rate` when absent.
    pub lambda_learning_rate: Option<f64>,
    pub epochs: usize,
    /// Rows per mini-batch; 0 means the whole training set.
    pub batch_size: usize,
    pub seed: u64,
    pub lambda0: f64,
    pub lambda_min: f64,
    pub loss_kind: LossKind,
    pub loss: LossConfig,
    /// Geometric decay factor of the GDC schedule, in `(0, 1]`.
    pub gdc_decay: f64,
    /// Strength of `(l2/2)‖W_last‖²` on the final weight matrix; 0 disables it.
    pub l2_final: f64,
    /// Holds λ at `lambda0` for ANRAT.
    pub freeze_lambda: bool,
    /// Report train error on the full split after each epoch rather than
    /// the running error of the mini-batches seen during the epoch.
    pub eval_train_full: bool,
    pub lr_grid: Vec<f64>,
    pub a_grid: Vec<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            lambda_learning_rate: None,
            epochs: 10,
            batch_size: 100,
            seed: 0,
            lambda0: 10.0,
            lambda_min: DEFAULT_LAMBDA_MIN,
            loss_kind: LossKind::Anrat,
            loss: LossConfig::default(),
            gdc_decay: 0.9,
            l2_final: 0.0,
            freeze_lambda: false,
            eval_train_full: false,
            lr_grid: DEFAULT_LR_GRID.to_vec(),
            a_grid: DEFAULT_A_GRID.to_vec(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        positive("learning_rate", self.learning_rate)?;
        positive("lambda_learning_rate", self.lambda_lr())?;
        positive("lambda_min", self.lambda_min)?;
        positive("lambda0", self.lambda0)?;
        if self.lambda0 < self.lambda_min {
            return Err(Error::Config(format!(
                "lambda0 {} is below lambda_min {}",
                self.lambda0, self.lambda_min
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if !(self.gdc_decay > 0.0 && self.gdc_decay <= 1.0) {
            return Err(Error::Config(format!("gdc_decay must be in (0, 1], got {}", self.gdc_decay)));
        }
        if !(self.l2_final.is_finite() && self.l2_final >= 0.0) {
            return Err(Error::Config(format!("l2_final must be >= 0, got {}", self.l2_final)));
        }
        self.loss.validate()
    }

    pub fn lambda_lr(&self) -> f64 {
        self.lambda_learning_rate.unwrap_or(self.learning_rate)
    }
}

/// Metrics after one epoch. `epoch` counts from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_err: f64,
    pub valid_err: f64,
    pub test_err: f64,
    /// Mean training objective over the epoch's mini-batches.
    pub objective: f64,
    /// λ at the end of the epoch.
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<EpochRecord>,
    /// 1-based epoch with the lowest validation error.
    pub best_epoch: usize,
    pub best_model: MlpModel,
    pub best_lambda: f64,
    /// Test error of `best_model`.
    pub test_error: f64,
    /// λ before the first step, then after every step.
    pub lambda_trace: Vec<f64>,
}

impl RunResult {
    pub fn best_record(&self) -> &EpochRecord {
        &self.records[self.best_epoch - 1]
    }

    pub fn final_lambda(&self) -> f64 {
        self.lambda_trace.last().copied().unwrap_or(f64::NAN)
    }
}

/// `max(lambda_min, lambda0 · decay^epoch)`.
pub fn gdc_schedule(epoch: usize, lambda0: f64, decay: f64, lambda_min: f64) -> f64 {
    let exp = i32::try_from(epoch).unwrap_or(i32::MAX);
    (lambda0 * decay.powi(exp)).max(lambda_min)
}

/// Objective value of `outputs` under the configured loss.
///
/// `logits` are the final pre-activations; only cross-entropy reads them.
fn objective(
    outputs: ArrayView2<f64>,
    logits: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    labels: &[usize],
    lambda: &ConvexityIndex,
    cfg: &TrainConfig,
) -> Result<f64> {
    let value = match cfg.loss_kind {
        LossKind::Anrat => {
            let rb = loss::residuals(outputs, targets)?;
            loss::anrat_objective(&rb, &cfg.loss, lambda)?
        }
        LossKind::Gdc => {
            let rb = loss::residuals(outputs, targets)?;
            loss::nrae(&rb, cfg.loss.p, cfg.loss.q, lambda)?
        }
        LossKind::Mse => loss::lp_error(&loss::residuals(outputs, targets)?, 2),
        LossKind::CrossEntropy => {
            let mut total = 0.0;
            for (row, &label) in logits.axis_iter(Axis(0)).zip(labels) {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
                total += lse - row[label];
            }
            total / labels.len() as f64
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite("training objective".into()))
    }
}

fn l2_term(model: &MlpModel, cfg: &TrainConfig) -> f64 {
    if cfg.l2_final == 0.0 {
        return 0.0;
    }
    let w = model.layers().last().expect("model has layers").weights();
    0.5 * cfg.l2_final * w.iter().map(|v| v * v).sum::<f64>()
}

struct StepOutcome {
    objective: f64,
    outputs: Array2<f64>,
}

fn step(
    model: &mut MlpModel,
    lambda: &mut ConvexityIndex,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    labels: &[usize],
    cfg: &TrainConfig,
) -> Result<StepOutcome> {
    let (outputs, trace) = model.forward(inputs)?;
    let logits = trace.pre_activations().last().expect("trace has layers");
    let value = objective(outputs.view(), logits.view(), targets, labels, lambda, cfg)? + l2_term(model, cfg);
    let mut grads = match cfg.loss_kind {
        LossKind::Anrat | LossKind::Gdc => {
            let g = loss::grad_outputs(outputs.view(), targets, &cfg.loss, lambda)?;
            model.backward(&trace, g.view())?
        }
        LossKind::Mse => {
            let g = loss::lp_grad_outputs(outputs.view(), targets, 2)?;
            model.backward(&trace, g.view())?
        }
        LossKind::CrossEntropy => {
            let m = outputs.nrows() as f64;
            let g = (&outputs - &targets) / m;
            model.backward_from_logits(&trace, g.view())?
        }
    };
    if cfg.l2_final > 0.0 {
        let last = grads.layers.last_mut().expect("model has layers");
        let w = model.layers().last().expect("model has layers").weights();
        last.weights.scaled_add(cfg.l2_final, w);
    }
    // The λ gradient is taken at the pre-update weights, like the weight gradient.
    let lambda_grad = if cfg.loss_kind == LossKind::Anrat && !cfg.freeze_lambda {
        let rb = loss::residuals(outputs.view(), targets)?;
        Some(loss::grad_lambda(&rb, &cfg.loss, lambda)?)
    } else {
        None
    };
    model.apply_gradients(&grads, cfg.learning_rate)?;
    if let Some(g) = lambda_grad {
        lambda.descend(g, cfg.lambda_lr())?;
    }
    Ok(StepOutcome {
        objective: value,
        outputs,
    })
}

/// One joint update of the weights and λ on a batch; returns the objective
/// evaluated before the update.
///
/// The weights move by `−lr ∇_W`, and λ moves to
/// `max(lambda_min, λ − lr_λ ∂/∂λ)`. `targets` are the desired network
/// outputs (one-hot rows for classification).
pub fn anrat_step(
    model: &mut MlpModel,
    lambda: &mut ConvexityIndex,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    cfg: &TrainConfig,
) -> Result<f64> {
    let cfg = TrainConfig {
        loss_kind: LossKind::Anrat,
        ..cfg.clone()
    };
    cfg.validate()?;
    let labels: Vec<usize> = targets.axis_iter(Axis(0)).map(|r| argmax(r.iter().copied())).collect();
    step(model, lambda, inputs, targets, &labels, &cfg).map(|s| s.objective)
}

/// The configured objective of `model` on a whole dataset.
pub fn dataset_objective(
    model: &MlpModel,
    lambda: &ConvexityIndex,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<f64> {
    let targets = one_hot(data.labels(), model.output_dim())?;
    let (outputs, trace) = model.forward(data.inputs())?;
    let logits = trace.pre_activations().last().expect("trace has layers");
    Ok(objective(outputs.view(), logits.view(), targets.view(), data.labels(), lambda, cfg)? + l2_term(model, cfg))
}

fn check_compatible(spec: &ModelSpec, splits: &Splits, cfg: &TrainConfig) -> Result<()> {
    spec.validate()?;
    let (inputs, outputs) = (spec.sizes[0], *spec.sizes.last().expect("validated"));
    if inputs != splits.train.features() {
        return Err(Error::Dimension(format!(
            "model takes {inputs} inputs but the data has {} features",
            splits.train.features()
        )));
    }
    if outputs != splits.train.classes() {
        return Err(Error::Dimension(format!(
            "model has {outputs} outputs but the data has {} classes",
            splits.train.classes()
        )));
    }
    if cfg.loss_kind == LossKind::CrossEntropy
        && spec.activations.last() != Some(&Activation::Softmax)
    {
        return Err(Error::Config("cross-entropy requires a softmax output layer".into()));
    }
    Ok(())
}

fn initial_lambda(cfg: &TrainConfig) -> Result<ConvexityIndex> {
    let value = match cfg.loss_kind {
        LossKind::Gdc => gdc_schedule(0, cfg.lambda0, cfg.gdc_decay, cfg.lambda_min),
        _ => cfg.lambda0,
    };
    ConvexityIndex::new(value, cfg.lambda_min)
}

fn shuffled_order(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SHUFFLE_SALT);
    rng.set_stream(epoch as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Trains a freshly initialized `spec` network and returns the
/// best-validation snapshot.
///
/// Fully determined by `(spec, splits, cfg)`. A non-finite objective or λ
/// aborts with [`Error::Diverged`] carrying the completed epochs.
pub fn train(spec: &ModelSpec, splits: &Splits, cfg: &TrainConfig) -> Result<RunResult> {
    cfg.validate()?;
    check_compatible(spec, splits, cfg)?;
    let mut model = init_model(spec, cfg.seed)?;
    let mut lambda = initial_lambda(cfg)?;
    let data = &splits.train;
    let n = data.len();
    let batch = if cfg.batch_size == 0 { n } else { cfg.batch_size.min(n) };
    let targets = one_hot(data.labels(), data.classes())?;

    let mut records: Vec<EpochRecord> = Vec::with_capacity(cfg.epochs);
    let mut lambda_trace = vec![lambda.value()];
    let mut best: Option<(usize, MlpModel, f64, f64)> = None;
    let mut best_valid = f64::INFINITY;

    for epoch in 1..=cfg.epochs {
        let diverged = |records: &Vec<EpochRecord>| Error::Diverged {
            epoch,
            records: records.clone(),
        };
        if cfg.loss_kind == LossKind::Gdc {
            lambda.set(gdc_schedule(epoch - 1, cfg.lambda0, cfg.gdc_decay, cfg.lambda_min))?;
        }
        let order = if batch == n {
            (0..n).collect()
        } else {
            shuffled_order(n, cfg.seed, epoch)
        };
        let mut objective_sum = 0.0;
        let mut wrong = 0usize;
        for idx in order.chunks(batch) {
            let x = data.inputs().select(Axis(0), idx);
            let y = targets.select(Axis(0), idx);
            let labels: Vec<usize> = idx.iter().map(|i| data.labels()[*i]).collect();
            let out = match step(&mut model, &mut lambda, x.view(), y.view(), &labels, cfg) {
                Ok(out) => out,
                Err(Error::NonFinite(_)) => return Err(diverged(&records)),
                Err(e) => return Err(e),
            };
            objective_sum += out.objective * idx.len() as f64;
            wrong += out
                .outputs
                .axis_iter(Axis(0))
                .zip(&labels)
                .filter(|(row, l)| argmax(row.iter().copied()) != **l)
                .count();
            lambda_trace.push(lambda.value());
        }
        let evaluate = |ds: &Dataset| -> Result<f64> {
            let outputs = model.predict(ds.inputs(), EVAL_CHUNK)?;
            if !outputs.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("evaluation outputs".into()));
            }
            crate::nn::error_rate(outputs.view(), ds.labels())
        };
        let metrics = (|| -> Result<(f64, f64, f64)> {
            let train_err = if cfg.eval_train_full {
                evaluate(data)?
            } else {
                wrong as f64 / n as f64
            };
            Ok((train_err, evaluate(&splits.validation)?, evaluate(&splits.test)?))
        })();
        let (train_err, valid_err, test_err) = match metrics {
            Ok(m) => m,
            Err(Error::NonFinite(_)) => return Err(diverged(&records)),
            Err(e) => return Err(e),
        };
        records.push(EpochRecord {
            epoch,
            train_err,
            valid_err,
            test_err,
            objective: objective_sum / n as f64,
            lambda: lambda.value(),
        });
        if valid_err < best_valid {
            best_valid = valid_err;
            best = Some((epoch, model.clone(), lambda.value(), test_err));
        }
    }
    // Error rates are finite, so the first epoch always improves on infinity.
    let (best_epoch, best_model, best_lambda, test_error) =
        best.expect("first epoch sets the best snapshot");
    Ok(RunResult {
        records,
        best_epoch,
        best_model,
        best_lambda,
        test_error,
        lambda_trace,
    })
}

#[cfg(test)]
mod tests;
