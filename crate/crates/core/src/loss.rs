//! The risk-averting loss family.
//!
//! Every objective here is a function of the per-sample residual norms
//! `e_i = ‖f(x_i) − y_i‖` (Euclidean norm over output dimensions):
//!
//! | objective       | value                                                    |
//! |-----------------|----------------------------------------------------------|
//! | L_p error       | `(1/m) Σ e_i^p`                                          |
//! | log RAE         | `log((1/m) Σ exp(λ^q e_i^p))`                            |
//! | NRAE            | `log RAE / λ^q`                                          |
//! | minimax         | `max_i e_i^p`                                            |
//! | ANRAT objective | `NRAE + a λ^(−r)`                                        |
//!
//! NRAE interpolates between the L_p error (as `λ → 0`) and the minimax
//! error (as `λ → ∞`), and always lies between them.
//!
//! # Evaluation
//!
//! The exponential sum overflows a double as soon as `λ^q e_i^p` passes
//! roughly 709, which happens at `λ = 10` for residuals near 2.7. All
//! evaluations therefore go through the shifted form
//!
//! ```text
//! NRAE = max_i e_i^p + log1p((1/m) Σ expm1(d_i)) / λ^q,   d_i = λ^q (e_i^p − max_j e_j^p) ≤ 0
//! ```
//!
//! which never overflows, returns `e_1^p` exactly when `m = 1`, and keeps full
//! relative precision as `λ → 0` (where the naive form cancels). All
//! arithmetic is `f64`.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default positivity floor for the convexity index.
pub const DEFAULT_LAMBDA_MIN: f64 = 1e-3;

/// Hyperparameters `(p, q, r, a)` of the ANRAT objective.
///
/// `p` is the exponent on the residual norm, `q` the exponent on λ, and
/// `a λ^(−r)` the penalty that discourages λ from collapsing to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub p: u32,
    pub q: u32,
    pub r: u32,
    pub a: f64,
}

impl LossConfig {
    pub fn new(p: u32, q: u32, r: u32, a: f64) -> Result<Self> {
        let cfg = Self { p, q, r, a };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 1 || self.q < 1 || self.r < 1 {
            return Err(Error::Config(format!(
                "loss exponents must be >= 1 (p = {}, q = {}, r = {})",
                self.p, self.q, self.r
            )));
        }
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::Config(format!(
                "penalty weight a must be finite and >= 0, got {}",
                self.a
            )));
        }
        Ok(())
    }

    /// Same exponents, different penalty weight.
    pub fn with_penalty(self, a: f64) -> Result<Self> {
        Self::new(self.p, self.q, self.r, a)
    }
}

impl Default for LossConfig {
    /// `p = 2, q = 2, r = 1, a = 0.1`.
    fn default() -> Self {
        Self {
            p: 2,
            q: 2,
            r: 1,
            a: 0.1,
        }
    }
}

/// The trainable convexity index λ together with its positivity floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityIndex {
    value: f64,
    floor: f64,
}

impl ConvexityIndex {
    pub fn new(value: f64, floor: f64) -> Result<Self> {
        if !(floor.is_finite() && floor > 0.0) {
            return Err(Error::Config(format!(
                "lambda floor must be finite and > 0, got {floor}"
            )));
        }
        if !(value.is_finite() && value >= floor) {
            return Err(Error::Config(format!(
                "lambda must be finite and >= its floor {floor}, got {value}"
            )));
        }
        Ok(Self { value, floor })
    }

    /// λ with the default floor of `1e-3`.
    pub fn with_default_floor(value: f64) -> Result<Self> {
        Self::new(value, DEFAULT_LAMBDA_MIN)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Sets λ, clamping at the floor. Non-finite values are rejected.
    pub fn set(&mut self, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFinite("lambda update".into()));
        }
        self.value = value.max(self.floor);
        Ok(())
    }

    /// One gradient-descent step on λ followed by the floor clamp.
    pub fn descend(&mut self, grad: f64, lr: f64) -> Result<()> {
        self.set(self.value - lr * grad)
    }

    fn pow(&self, q: u32) -> Result<f64> {
        let v = self.value.powi(q as i32);
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!(
                "lambda^q (lambda = {}, q = {q})",
                self.value
            )))
        }
    }
}

/// Per-sample residual norms `e_i ≥ 0` for a batch of `m ≥ 1` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBatch {
    norms: Vec<f64>,
}

impl ResidualBatch {
    pub fn new(norms: Vec<f64>) -> Result<Self> {
        if norms.is_empty() {
            return Err(Error::Dimension("residual batch must hold at least one sample".into()));
        }
        if let Some(i) = norms.iter().position(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::NonFinite(format!(
                "residual norm {} at sample {i} (must be finite and >= 0)",
                norms[i]
            )));
        }
        Ok(Self { norms })
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Sample count `m`.
    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    fn powered(&self, p: u32) -> Vec<f64> {
        self.norms.iter().map(|e| e.powi(p as i32)).collect()
    }
}

/// Softmax weights `k_i` over the scaled errors `λ^q e_i^p`.
///
/// These are the effective per-sample weights of the NRAE gradient: the MSE
/// gradient weights every sample by `1/m`, NRAE weights sample `i` by `k_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWeights {
    k: Vec<f64>,
}

impl SampleWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.k
    }

    /// `Σ k_i v_i`.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.k.iter().zip(values).map(|(k, v)| k * v).sum()
    }
}

/// Shifted exponents shared by every λ-dependent quantity.
struct Shifted {
    powered: Vec<f64>,
    max_powered: f64,
    lam_q: f64,
    /// `λ^q (e_i^p − max e^p)`, all `≤ 0`.
    shifted: Vec<f64>,
}

impl Shifted {
    fn new(rb: &ResidualBatch, p: u32, q: u32, lambda: &ConvexityIndex) -> Result<Self> {
        let lam_q = lambda.pow(q)?;
        let powered = rb.powered(p);
        let max_powered = powered.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(lam_q * max_powered).is_finite() {
            return Err(Error::NonFinite(format!(
                "lambda^q * e^p (lambda^q = {lam_q}, max e^p = {max_powered})"
            )));
        }
        let shifted = powered.iter().map(|v| lam_q * (v - max_powered)).collect();
        Ok(Self {
            powered,
            max_powered,
            lam_q,
            shifted,
        })
    }

    /// `log((1/m) Σ exp(d_i))`, which is `≤ 0`.
    fn log_mean_exp(&self) -> f64 {
        let m = self.shifted.len() as f64;
        let mean = self.shifted.iter().map(|d| d.exp_m1()).sum::<f64>() / m;
        mean.ln_1p()
    }

    fn nrae(&self) -> f64 {
        self.max_powered + self.log_mean_exp() / self.lam_q
    }

    fn weights(&self) -> SampleWeights {
        let exps: Vec<f64> = self.shifted.iter().map(|d| d.exp()).collect();
        let total: f64 = exps.iter().sum();
        SampleWeights {
            k: exps.into_iter().map(|v| v / total).collect(),
        }
    }
}

fn check_finite(view: &ArrayView2<f64>, what: &str) -> Result<()> {
    if view.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// Row-wise differences `f_i − y_i` and their norms.
fn residual_rows(
    predictions: ArrayView2<f64>,
    targets: ArrayView2<f64>,
) -> Result<(Array2<f64>, ResidualBatch)> {
    if predictions.shape() != targets.shape() {
        return Err(Error::Dimension(format!(
            "predictions {:?} vs targets {:?}",
            predictions.shape(),
            targets.shape()
        )));
    }
    if predictions.nrows() == 0 || predictions.ncols() == 0 {
        return Err(Error::Dimension(format!(
            "empty prediction matrix {:?}",
            predictions.shape()
        )));
    }
    check_finite(&predictions, "predictions")?;
    check_finite(&targets, "targets")?;
    let diff = &predictions - &targets;
    let norms = diff
        .axis_iter(Axis(0))
        .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    Ok((diff, ResidualBatch::new(norms)?))
}

/// Euclidean norm of each row of `predictions − targets`.
pub fn residuals(predictions: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<ResidualBatch> {
    residual_rows(predictions, targets).map(|(_, rb)| rb)
}

/// `(1/m) Σ e_i^p`. With `p = 2` this is the mean squared error.
pub fn lp_error(rb: &ResidualBatch, p: u32) -> f64 {
    rb.powered(p).iter().sum::<f64>() / rb.len() as f64
}

/// `max_i e_i^p`, the `λ → ∞` limit of NRAE.
pub fn minimax_error(rb: &ResidualBatch, p: u32) -> f64 {
    rb.powered(p).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Logarithm of the risk-averting error `(1/m) Σ exp(λ^q e_i^p)`.
///
/// Finite whenever `λ^q max e_i^p` is, even though the RAE itself is not.
pub fn log_rae(rb: &ResidualBatch, p: u32, q: u32, lambda: &ConvexityIndex) -> Result<f64> {
    let sh = Shifted::new(rb, p, q, lambda)?;
    Ok(sh.lam_q * sh.max_powered + sh.log_mean_exp())
}

/// Normalized risk-averting error `log RAE / λ^q`.
pub fn nrae(rb: &ResidualBatch, p: u32, q: u32, lambda: &ConvexityIndex) -> Result<f64> {
    Ok(Shifted::new(rb, p, q, lambda)?.nrae())
}

/// Softmax of `λ^q e_i^p` over the batch.
pub fn sample_weights(
    rb: &ResidualBatch,
    p: u32,
    q: u32,
    lambda: &ConvexityIndex,
) -> Result<SampleWeights> {
    Ok(Shifted::new(rb, p, q, lambda)?.weights())
}

/// `NRAE + a λ^(−r)`.
pub fn anrat_objective(rb: &ResidualBatch, cfg: &LossConfig, lambda: &ConvexityIndex) -> Result<f64> {
    cfg.validate()?;
    let value = nrae(rb, cfg.p, cfg.q, lambda)?;
    Ok(value + cfg.a * lambda.value().powi(-(cfg.r as i32)))
}

/// Derivative of the ANRAT objective with respect to λ:
/// `(q/λ)(Σ k_i e_i^p − NRAE) − a r λ^(−r−1)`.
///
/// The first term is never negative: NRAE is nondecreasing in λ.
pub fn grad_lambda(rb: &ResidualBatch, cfg: &LossConfig, lambda: &ConvexityIndex) -> Result<f64> {
    cfg.validate()?;
    let sh = Shifted::new(rb, cfg.p, cfg.q, lambda)?;
    let k = sh.weights();
    // Both E_k[e^p] and NRAE are measured relative to max e^p so that the
    // difference does not cancel at small λ.
    let centered: Vec<f64> = sh.powered.iter().map(|v| v - sh.max_powered).collect();
    let spread = k.expectation(&centered) - sh.log_mean_exp() / sh.lam_q;
    let lam = lambda.value();
    let r = cfg.r as i32;
    Ok(cfg.q as f64 / lam * spread - cfg.a * cfg.r as f64 * lam.powi(-r - 1))
}

fn singular_check(rb: &ResidualBatch, p: u32) -> Result<()> {
    if p < 2 {
        if let Some(sample) = rb.norms().iter().position(|e| *e == 0.0) {
            return Err(Error::SingularGradient { sample, p });
        }
    }
    Ok(())
}

/// Scales row `i` of the residual matrix by `p · w_i · e_i^(p−2)`.
fn weighted_rows(mut diff: Array2<f64>, rb: &ResidualBatch, p: u32, weights: &[f64]) -> Array2<f64> {
    for ((mut row, &e), &w) in diff.axis_iter_mut(Axis(0)).zip(rb.norms()).zip(weights) {
        let radial = match p {
            2 => 1.0,
            _ => e.powi(p as i32 - 2),
        };
        let scale = p as f64 * w * radial;
        row.mapv_inplace(|v| v * scale);
    }
    diff
}

/// Gradient of the ANRAT objective with respect to the model outputs.
///
/// Row `i` is `p k_i e_i^(p−2) (f_i − y_i)`; at `p = 2` this is the MSE
/// gradient with the uniform weight `1/m` replaced by `k_i`. For `p < 2` a
/// zero residual makes the gradient undefined and is reported as an error.
pub fn grad_outputs(
    predictions: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    cfg: &LossConfig,
    lambda: &ConvexityIndex,
) -> Result<Array2<f64>> {
    cfg.validate()?;
    let (diff, rb) = residual_rows(predictions, targets)?;
    singular_check(&rb, cfg.p)?;
    let k = sample_weights(&rb, cfg.p, cfg.q, lambda)?;
    Ok(weighted_rows(diff, &rb, cfg.p, k.as_slice()))
}

/// Gradient of the plain L_p error `(1/m) Σ e_i^p` with respect to the outputs.
pub fn lp_grad_outputs(
    predictions: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    p: u32,
) -> Result<Array2<f64>> {
    if p < 1 {
        return Err(Error::Config("p must be >= 1".into()));
    }
    let (diff, rb) = residual_rows(predictions, targets)?;
    singular_check(&rb, p)?;
    let uniform = vec![1.0 / rb.len() as f64; rb.len()];
    Ok(weighted_rows(diff, &rb, p, &uniform))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    // Reference values below were computed with 40-digit mpmath directly
    // from the unshifted formulas.
    const LOG_RAE_FIXTURE: f64 = 3.355440171013797;
    const NRAE_FIXTURE: f64 = 0.8388600427534492;
    const K_FIXTURE: [f64; 2] = [0.04742587317756678, 0.9525741268224332];
    const GRAD_LAMBDA_FIXTURE: f64 = 0.10057055236337573;

    fn fixture() -> ResidualBatch {
        ResidualBatch::new(vec![0.5, 1.0]).unwrap()
    }

    fn lam(v: f64) -> ConvexityIndex {
        ConvexityIndex::with_default_floor(v).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn residuals_zero_when_predictions_match() {
        let x = array![[0.1, 0.2, 0.3], [1.0, -2.0, 0.5]];
        let rb = residuals(x.view(), x.view()).unwrap();
        assert_eq!(rb.norms(), &[0.0, 0.0]);
    }

    #[test]
    fn residuals_scalar_and_rows() {
        let rb = residuals(array![[0.7]].view(), array![[1.0]].view()).unwrap();
        assert!(close(rb.norms()[0], 0.3, 1e-15));

        let pred = array![[0.3, 0.4], [0.0, 1.0]];
        let target = array![[0.0, 0.0], [0.0, 0.0]];
        let rb = residuals(pred.view(), target.view()).unwrap();
        assert!(close(rb.norms()[0], 0.5, 1e-15));
        assert_eq!(rb.norms()[1], 1.0);
    }

    #[test]
    fn residuals_reject_bad_input() {
        let a = array![[1.0, 2.0]];
        let b = array![[1.0], [2.0]];
        assert!(matches!(residuals(a.view(), b.view()), Err(Error::Dimension(_))));
        let nan = array![[f64::NAN, 0.0]];
        assert!(matches!(residuals(nan.view(), a.view()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn lp_error_values() {
        assert_eq!(lp_error(&ResidualBatch::new(vec![0.0; 3]).unwrap(), 2), 0.0);
        assert_eq!(lp_error(&fixture(), 2), 0.625);
        let single = ResidualBatch::new(vec![1.7]).unwrap();
        assert_eq!(lp_error(&single, 3), 1.7f64.powi(3));
    }

    #[test]
    fn log_rae_values() {
        let zero = ResidualBatch::new(vec![0.0; 4]).unwrap();
        assert_eq!(log_rae(&zero, 2, 2, &lam(3.0)).unwrap(), 0.0);
        assert!(close(log_rae(&fixture(), 2, 2, &lam(2.0)).unwrap(), LOG_RAE_FIXTURE, 1e-13));
        let big = ResidualBatch::new(vec![20.0]).unwrap();
        assert_eq!(log_rae(&big, 2, 2, &lam(10.0)).unwrap(), 40000.0);
    }

    #[test]
    fn nrae_values() {
        let single = ResidualBatch::new(vec![0.37]).unwrap();
        for l in [1e-3, 0.5, 7.0, 1e4] {
            assert_eq!(nrae(&single, 2, 2, &lam(l)).unwrap(), 0.37f64.powi(2));
        }
        assert!(close(nrae(&fixture(), 2, 2, &lam(2.0)).unwrap(), NRAE_FIXTURE, 1e-14));
        assert!(close(nrae(&fixture(), 2, 2, &lam(1e-3)).unwrap(), 0.625, 1e-5));
    }

    #[test]
    fn minimax_values() {
        assert_eq!(minimax_error(&fixture(), 2), 1.0);
        let flat = ResidualBatch::new(vec![0.4; 5]).unwrap();
        assert_eq!(minimax_error(&flat, 3), 0.4f64.powi(3));
        assert!(close(nrae(&fixture(), 2, 2, &lam(50.0)).unwrap(), 1.0, 1e-2));
    }

    #[test]
    fn sample_weight_values() {
        let flat = ResidualBatch::new(vec![0.8; 4]).unwrap();
        for k in sample_weights(&flat, 2, 2, &lam(5.0)).unwrap().as_slice() {
            assert_eq!(*k, 0.25);
        }
        let k = sample_weights(&fixture(), 2, 2, &lam(2.0)).unwrap();
        assert!(close(k.as_slice()[0], K_FIXTURE[0], 1e-15));
        assert!(close(k.as_slice()[1], K_FIXTURE[1], 1e-15));

        let small = ResidualBatch::new(vec![0.1, 0.2, 0.3]).unwrap();
        let k = sample_weights(&small, 2, 2, &lam(DEFAULT_LAMBDA_MIN)).unwrap();
        for v in k.as_slice() {
            assert!(close(*v, 1.0 / 3.0, 1e-3));
        }
    }

    #[test]
    fn objective_values() {
        let off = LossConfig::new(2, 2, 1, 0.0).unwrap();
        assert_eq!(
            anrat_objective(&fixture(), &off, &lam(2.0)).unwrap(),
            nrae(&fixture(), 2, 2, &lam(2.0)).unwrap()
        );
        let cfg = LossConfig::new(2, 2, 1, 0.1).unwrap();
        assert!(close(
            anrat_objective(&fixture(), &cfg, &lam(2.0)).unwrap(),
            NRAE_FIXTURE + 0.05,
            1e-14
        ));
        let perfect = ResidualBatch::new(vec![0.0; 3]).unwrap();
        assert!(close(anrat_objective(&perfect, &cfg, &lam(10.0)).unwrap(), 0.01, 1e-17));
    }

    #[test]
    fn grad_outputs_values() {
        let cfg = LossConfig::new(2, 2, 1, 0.1).unwrap();
        let y = array![[0.2, -0.4], [1.0, 0.0]];
        let g = grad_outputs(y.view(), y.view(), &cfg, &lam(3.0)).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));

        let f = array![[0.9, -0.3]];
        let t = array![[0.1, 0.2]];
        let g = grad_outputs(f.view(), t.view(), &cfg, &lam(7.0)).unwrap();
        assert!(close(g[[0, 0]], 2.0 * 0.8, 1e-15));
        assert!(close(g[[0, 1]], 2.0 * -0.5, 1e-15));

        let f = array![[1.0], [1.0]];
        let t = array![[0.5], [0.0]];
        let g = grad_outputs(f.view(), t.view(), &cfg, &lam(2.0)).unwrap();
        assert!(close(g[[0, 0]], 2.0 * K_FIXTURE[0] * 0.5, 1e-15));
        assert!(close(g[[1, 0]], 2.0 * K_FIXTURE[1], 1e-15));
    }

    #[test]
    fn grad_outputs_singular_for_small_p() {
        let cfg = LossConfig::new(1, 2, 1, 0.0).unwrap();
        let f = array![[1.0], [0.5]];
        let t = array![[1.0], [0.0]];
        assert!(matches!(
            grad_outputs(f.view(), t.view(), &cfg, &lam(1.0)),
            Err(Error::SingularGradient { sample: 0, p: 1 })
        ));
    }

    #[test]
    fn grad_lambda_values() {
        let cfg = LossConfig::new(2, 2, 1, 0.1).unwrap();
        let flat = ResidualBatch::new(vec![0.6; 3]).unwrap();
        let g = grad_lambda(&flat, &cfg, &lam(4.0)).unwrap();
        assert!(close(g, -0.1 / 16.0, 1e-16));

        let g = grad_lambda(&fixture(), &cfg, &lam(2.0)).unwrap();
        assert!(close(g, GRAD_LAMBDA_FIXTURE, 1e-14));
    }

    #[test]
    fn overflow_free_at_extreme_lambda() {
        let rb = ResidualBatch::new(vec![100.0, 3.0, 0.0, 99.9]).unwrap();
        let l = lam(1e6);
        assert!(nrae(&rb, 2, 2, &l).unwrap().is_finite());
        let k = sample_weights(&rb, 2, 2, &l).unwrap();
        assert!(k.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn lambda_floor_and_validation() {
        assert!(ConvexityIndex::new(1e-4, 1e-3).is_err());
        assert!(ConvexityIndex::new(1.0, 0.0).is_err());
        let mut l = lam(0.01);
        l.descend(1.0, 1.0).unwrap();
        assert_eq!(l.value(), DEFAULT_LAMBDA_MIN);
        assert!(l.descend(f64::NAN, 1.0).is_err());
        assert!(LossConfig::new(0, 2, 1, 0.0).is_err());
        assert!(LossConfig::new(2, 2, 1, -1.0).is_err());
    }

    fn batch_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..3.0, 1..40)
    }

    proptest! {
        #[test]
        fn weights_form_a_simplex(e in batch_strategy(), l in 1e-3f64..50.0) {
            let rb = ResidualBatch::new(e).unwrap();
            let k = sample_weights(&rb, 2, 2, &lam(l)).unwrap();
            prop_assert!(k.as_slice().iter().all(|v| *v >= 0.0));
            prop_assert!((k.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn nrae_is_sandwiched(e in batch_strategy(), l in 1e-3f64..50.0, p in 1u32..4, q in 1u32..4) {
            let rb = ResidualBatch::new(e).unwrap();
            let v = nrae(&rb, p, q, &lam(l)).unwrap();
            prop_assert!(lp_error(&rb, p) <= v + 1e-12);
            prop_assert!(v <= minimax_error(&rb, p) + 1e-12);
        }

        #[test]
        fn grad_lambda_without_penalty_is_nonnegative(e in batch_strategy(), l in 1e-3f64..50.0) {
            let rb = ResidualBatch::new(e).unwrap();
            let cfg = LossConfig::new(2, 2, 1, 0.0).unwrap();
            prop_assert!(grad_lambda(&rb, &cfg, &lam(l)).unwrap() >= -1e-12);
        }
    }
}
