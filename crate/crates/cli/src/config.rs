//! Experiment configuration files.
//!
//! A config is an INI file with the sections `[dataset]`, `[model]`,
//! `[train]`, `[output]` and `[verify]`. Unknown sections and keys are
//! rejected so a typo cannot silently fall back to a default. Relative
//! paths are resolved against the working directory.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anrat::data::SyntheticKind;
use anrat::loss::LossConfig;
use anrat::nn::{Activation, ModelSpec};
use anrat::train::{LossKind, TrainConfig};
use anrat::{Error, Result};
use ini::{Ini, Properties};
use serde::Serialize;

const SECTIONS: [(&str, &[&str]); 5] = [
    ("dataset", &["kind", "path", "samples", "validation_count", "test_count"]),
    ("model", &["sizes", "hidden", "output"]),
    (
        "train",
        &[
            "loss",
            "learning_rate",
            "lambda_learning_rate",
            "epochs",
            "batch_size",
            "seed",
            "lambda0",
            "lambda_min",
            "p",
            "q",
            "r",
            "a",
            "gdc_decay",
            "l2_final",
            "freeze_lambda",
            "eval_train_full",
            "lr_grid",
            "a_grid",
        ],
    ),
    ("output", &["dir", "snapshot", "lambda_trace"]),
    (
        "verify",
        &[
            "seed",
            "fixtures",
            "corrupt_gradient",
            "batches",
            "lambda_points",
            "lambdas",
            "theta_min",
            "theta_max",
            "theta_points",
        ],
    ),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetConfig {
    /// Raw IDX files; the last `validation_count` training rows are held out.
    Mnist { path: PathBuf, validation_count: usize },
    /// Generated from the master seed; validation and test rows are taken
    /// from the tail.
    Synthetic {
        generator: SyntheticKind,
        samples: usize,
        validation_count: usize,
        test_count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub snapshot: bool,
    pub lambda_trace: bool,
}

/// Everything `train` and `gridsearch` need; echoed into `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub model: ModelSpec,
    /// `train.seed` is the master seed of the run.
    pub train: TrainConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Gradient-check fixtures.
    pub fixtures: usize,
    /// Test hook: perturbs the first analytic gradient coordinate.
    pub corrupt_gradient: Option<f64>,
    /// Residual batches for the λ scan.
    pub batches: usize,
    pub lambda_points: usize,
    /// λ grid of the convexity scan.
    pub lambdas: Vec<f64>,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_points: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            fixtures: 200,
            corrupt_gradient: None,
            batches: 100,
            lambda_points: 50,
            lambdas: vec![0.1, 0.5, 1.0, 2.0, 5.0, 10.0],
            theta_min: -4.0,
            theta_max: 6.0,
            theta_points: 200,
        }
    }
}

/// A parsed file, checked for unknown sections and keys.
pub struct ConfigFile {
    ini: Ini,
}

fn bad(section: &str, key: &str, detail: impl std::fmt::Display) -> Error {
    Error::Config(format!("{section}.{key}: {detail}"))
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(format!("config syntax: {e}")))?;
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(Error::Config(format!("key '{key}' appears before any section")));
                }
                continue;
            };
            let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| *s == name) else {
                return Err(Error::Config(format!("unknown section [{name}]")));
            };
            if let Some((key, _)) = props.iter().find(|(k, _)| !keys.contains(k)) {
                return Err(Error::Config(format!("unknown key {name}.{key}")));
            }
        }
        Ok(Self { ini })
    }

    fn section(&self, name: &'static str) -> Result<Section<'_>> {
        self.ini
            .section(Some(name))
            .map(|props| Section { name, props: Some(props) })
            .ok_or_else(|| Error::Config(format!("missing section [{name}]")))
    }

    fn optional(&self, name: &'static str) -> Section<'_> {
        Section { name, props: self.ini.section(Some(name)) }
    }

    /// `out` and `seed` override `output.dir` and `train.seed`.
    pub fn experiment(&self, out: Option<&Path>, seed: Option<u64>) -> Result<ExperimentConfig> {
        let dataset = self.section("dataset")?;
        let model = self.section("model")?;
        let train = self.section("train")?;
        let output = self.optional("output");

        let dataset = match dataset.required::<String>("kind")?.to_ascii_lowercase().as_str() {
            "mnist" => DatasetConfig::Mnist {
                path: dataset.required("path")?,
                validation_count: dataset.or("validation_count", 10_000)?,
            },
            kind => DatasetConfig::Synthetic {
                generator: SyntheticKind::from_str(kind).map_err(|e| bad("dataset", "kind", e))?,
                samples: dataset.required("samples")?,
                validation_count: dataset.required("validation_count")?,
                test_count: dataset.required("test_count")?,
            },
        };

        let sizes: Vec<usize> = model.required_list("sizes")?;
        let hidden: Activation = model.or("hidden", Activation::Tanh)?;
        let out_act: Activation = model.or("output", Activation::Softmax)?;
        let model = ModelSpec::classifier(&sizes, hidden, out_act).map_err(|e| bad("model", "sizes", e))?;

        let d = TrainConfig::default();
        let dl = LossConfig::default();
        let loss = LossConfig::new(
            train.or("p", dl.p)?,
            train.or("q", dl.q)?,
            train.or("r", dl.r)?,
            train.or("a", dl.a)?,
        )
        .map_err(|e| bad("train", "p/q/r/a", e))?;
        let lambda_learning_rate = match train.get("lambda_learning_rate") {
            Some(_) => Some(train.required("lambda_learning_rate")?),
            None => None,
        };
        let train_cfg = TrainConfig {
            learning_rate: train.required("learning_rate")?,
            lambda_learning_rate,
            epochs: train.required("epochs")?,
            batch_size: train.or("batch_size", d.batch_size)?,
            seed: match seed {
                Some(s) => s,
                None => train.or("seed", d.seed)?,
            },
            lambda0: train.or("lambda0", d.lambda0)?,
            lambda_min: train.or("lambda_min", d.lambda_min)?,
            loss_kind: train.or("loss", LossKind::Anrat)?,
            loss,
            gdc_decay: train.or("gdc_decay", d.gdc_decay)?,
            l2_final: train.or("l2_final", d.l2_final)?,
            freeze_lambda: train.or("freeze_lambda", d.freeze_lambda)?,
            eval_train_full: train.or("eval_train_full", d.eval_train_full)?,
            lr_grid: train.list_or("lr_grid", d.lr_grid)?,
            a_grid: train.list_or("a_grid", d.a_grid)?,
        };
        train_cfg.validate()?;

        let dir = match out {
            Some(dir) => dir.to_path_buf(),
            None => output.required("dir")?,
        };
        let output = OutputConfig {
            dir,
            snapshot: output.or("snapshot", true)?,
            lambda_trace: output.or("lambda_trace", true)?,
        };
        Ok(ExperimentConfig { dataset, model, train: train_cfg, output })
    }

    /// `seed` overrides `verify.seed`.
    pub fn verify(&self, seed: Option<u64>) -> Result<VerifyConfig> {
        let v = self.optional("verify");
        let d = VerifyConfig::default();
        let corrupt_gradient = match v.get("corrupt_gradient") {
            Some(_) => Some(v.required("corrupt_gradient")?),
            None => None,
        };
        Ok(VerifyConfig {
            seed: match seed {
                Some(s) => s,
                None => v.or("seed", d.seed)?,
            },
            fixtures: v.or("fixtures", d.fixtures)?,
            corrupt_gradient,
            batches: v.or("batches", d.batches)?,
            lambda_points: v.or("lambda_points", d.lambda_points)?,
            lambdas: v.list_or("lambdas", d.lambdas)?,
            theta_min: v.or("theta_min", d.theta_min)?,
            theta_max: v.or("theta_max", d.theta_max)?,
            theta_points: v.or("theta_points", d.theta_points)?,
        })
    }
}

struct Section<'a> {
    name: &'static str,
    props: Option<&'a Properties>,
}

impl Section<'_> {
    fn get(&self, key: &str) -> Option<&str> {
        self.props.and_then(|p| p.get(key)).map(str::trim)
    }

    fn parse_value<T: FromStr>(&self, key: &str, raw: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        raw.parse().map_err(|e| bad(self.name, key, format!("cannot parse '{raw}': {e}")))
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get(key).ok_or_else(|| Error::Config(format!("missing key {}.{key}", self.name)))?;
        self.parse_value(key, raw)
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            Some(raw) => self.parse_value(key, raw),
            None => Ok(default),
        }
    }

    fn list<T: FromStr>(&self, key: &str, raw: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let items: Vec<T> = raw
            .split(',')
            .map(|item| self.parse_value(key, item.trim()))
            .collect::<Result<_>>()?;
        Ok(items)
    }

    fn required_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get(key).ok_or_else(|| Error::Config(format!("missing key {}.{key}", self.name)))?;
        self.list(key, raw)
    }

    fn list_or<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            Some(raw) => self.list(key, raw),
            None => Ok(default),
        }
    }
}
