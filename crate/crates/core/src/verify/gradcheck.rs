//! Randomized end-to-end gradient checks of the ANRAT objective.
//!
//! Each fixture is a small random network, batch, target matrix, λ and
//! penalty weight. The analytic gradient (loss gradient chained through
//! backpropagation, plus the λ derivative) is compared with central finite
//! differences of the composed objective `J(W, λ)`.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{fd_grad_with, GradCheckReport};
use crate::error::Result;
use crate::loss::{self, ConvexityIndex, LossConfig, DEFAULT_LAMBDA_MIN};
use crate::nn::{init_model, Activation, MlpModel, ModelSpec};

/// Relative error bound for a passing check.
pub const GRADCHECK_TOLERANCE: f64 = 1e-6;
/// Relative finite-difference step, scaled by `max(1, |θ|)` for weights
/// and by `λ` for λ.
pub const FD_STEP: f64 = 1e-5;
/// Denominator floor of the relative error, as a multiple of `max(1, |J|)`.
pub const RELATIVE_FLOOR: f64 = 1e-4;
/// ReLU pre-activations closer than this to the kink are resampled.
const KINK_MARGIN: f64 = 1e-3;
const MAX_PARAMETERS: usize = 1000;

#[derive(Debug, Clone)]
pub struct GradFixture {
    pub model: MlpModel,
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
    pub lambda: f64,
    pub loss: LossConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckSummary {
    pub fixtures: usize,
    pub max_rel_error: f64,
    pub worst_fixture: usize,
    pub tolerance: f64,
    pub passed: bool,
    pub reports: Vec<GradCheckReport>,
}

const HIDDEN: [Activation; 4] = [Activation::Sigmoid, Activation::Tanh, Activation::Relu, Activation::Identity];
const OUTPUT: [Activation; 4] = [Activation::Softmax, Activation::Sigmoid, Activation::Tanh, Activation::Identity];

fn near_kink(model: &MlpModel, inputs: &Array2<f64>) -> Result<bool> {
    let (_, trace) = model.forward(inputs.view())?;
    Ok(model
        .layers()
        .iter()
        .zip(trace.pre_activations())
        .any(|(layer, z)| layer.activation() == Activation::Relu && z.iter().any(|v| v.abs() < KINK_MARGIN)))
}

impl GradFixture {
    /// A random fixture with at most 1000 parameters, `p = q = 2`, `r = 1`,
    /// λ log-uniform in `[λ_min, 20]` and `a` uniform in `[0, 1]`.
    pub fn random(rng: &mut ChaCha8Rng) -> Result<Self> {
        loop {
            let depth = rng.random_range(1..=3);
            let mut sizes = vec![rng.random_range(1..=6)];
            for _ in 1..depth {
                sizes.push(rng.random_range(1..=10));
            }
            sizes.push(rng.random_range(1..=4));
            let mut activations: Vec<Activation> =
                (1..depth).map(|_| HIDDEN[rng.random_range(0..HIDDEN.len())]).collect();
            activations.push(OUTPUT[rng.random_range(0..OUTPUT.len())]);
            let spec = ModelSpec::new(sizes.clone(), activations)?;
            let model = init_model(&spec, rng.random())?;
            if model.parameter_count() > MAX_PARAMETERS {
                continue;
            }
            let m = rng.random_range(1..=8);
            let out = *sizes.last().expect("nonempty");
            for _ in 0..20 {
                let inputs = Array2::from_shape_simple_fn((m, sizes[0]), || rng.random_range(-1.0..1.0));
                if near_kink(&model, &inputs)? {
                    continue;
                }
                let targets = Array2::from_shape_simple_fn((m, out), || rng.random_range(0.0..1.0));
                let lambda = (DEFAULT_LAMBDA_MIN.ln() + rng.random::<f64>() * (20.0 / DEFAULT_LAMBDA_MIN).ln()).exp();
                let loss = LossConfig::new(2, 2, 1, rng.random())?;
                return Ok(Self {
                    model,
                    inputs,
                    targets,
                    lambda,
                    loss,
                });
            }
        }
    }

    fn index(lambda: f64) -> Result<ConvexityIndex> {
        // The probes step below the training floor, which is harmless here.
        ConvexityIndex::new(lambda, f64::MIN_POSITIVE)
    }

    /// `J(W, λ)` at the fixture's parameters.
    pub fn objective(&self) -> Result<f64> {
        let (out, _) = self.model.forward(self.inputs.view())?;
        let rb = loss::residuals(out.view(), self.targets.view())?;
        loss::anrat_objective(&rb, &self.loss, &Self::index(self.lambda)?)
    }

    /// Weight gradients in [`MlpModel::parameters`] order, then `∂J/∂λ`.
    pub fn analytic(&self) -> Result<Vec<f64>> {
        let lambda = Self::index(self.lambda)?;
        let (out, trace) = self.model.forward(self.inputs.view())?;
        let g = loss::grad_outputs(out.view(), self.targets.view(), &self.loss, &lambda)?;
        let mut flat = self.model.backward(&trace, g.view())?.to_flat();
        let rb = loss::residuals(out.view(), self.targets.view())?;
        flat.push(loss::grad_lambda(&rb, &self.loss, &lambda)?);
        Ok(flat)
    }

    pub fn numeric(&self) -> Result<Vec<f64>> {
        let mut point = self.model.parameters();
        point.push(self.lambda);
        let n = point.len();
        let mut model = self.model.clone();
        let objective = |x: &[f64]| -> Result<f64> {
            model.set_parameters(&x[..n - 1])?;
            let (out, _) = model.forward(self.inputs.view())?;
            let rb = loss::residuals(out.view(), self.targets.view())?;
            loss::anrat_objective(&rb, &self.loss, &Self::index(x[n - 1])?)
        };
        let step = |i: usize| {
            if i == n - 1 {
                FD_STEP * point[i]
            } else {
                FD_STEP * point[i].abs().max(1.0)
            }
        };
        fd_grad_with(objective, &point, step)
    }

    /// Compares [`analytic`](Self::analytic) with [`numeric`](Self::numeric).
    /// `corrupt` scales the first analytic coordinate by `1 + corrupt`.
    pub fn check(&self, corrupt: Option<f64>) -> Result<GradCheckReport> {
        let mut analytic = self.analytic()?;
        if let Some(delta) = corrupt {
            analytic[0] += delta * analytic[0].abs().max(1.0);
        }
        let numeric = self.numeric()?;
        let floor = RELATIVE_FLOOR * self.objective()?.abs().max(1.0);
        GradCheckReport::compare(&analytic, &numeric, floor, GRADCHECK_TOLERANCE)
    }
}

/// Checks `count` random fixtures drawn from `seed`.
pub fn gradcheck_suite(count: usize, seed: u64, corrupt: Option<f64>) -> Result<GradCheckSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(count);
    for _ in 0..count {
        reports.push(GradFixture::random(&mut rng)?.check(corrupt)?);
    }
    let (worst_fixture, max_rel_error) = reports
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.max_rel_error))
        .fold((0, 0.0), |acc, (i, e)| if e > acc.1 { (i, e) } else { acc });
    Ok(GradCheckSummary {
        fixtures: count,
        max_rel_error,
        worst_fixture,
        tolerance: GRADCHECK_TOLERANCE,
        passed: reports.iter().all(|r| r.passed),
        reports,
    })
}
