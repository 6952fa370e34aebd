//! Numeric-Hessian scans of the loss landscape on one- and two-parameter toys.
//!
//! For each λ the scan counts grid points whose Hessian is positive
//! semidefinite. The primary column measures the risk-averting error
//! `RAE(θ) = (1/m) Σ exp(λ^q e_i(θ)^p)`, whose convex region is the one that
//! grows with λ. It is evaluated through the ratio `RAE(θ') / RAE(θ)`,
//! computed as `exp(u(θ') − u(θ))` with `u = log RAE`, so the stencil stays
//! near 1 however large λ is. Dividing by `RAE(θ) > 0` does not change the
//! sign of any eigenvalue. The NRAE Hessian is reported alongside; its
//! convex region need not grow.

use serde::Serialize;

use super::{naive_rae, spearman};
use crate::error::{Error, Result};
use crate::loss::{self, ConvexityIndex, ResidualBatch};

/// Relative finite-difference step, scaled by `max(1, |θ|)`.
pub const HESSIAN_STEP: f64 = 1e-4;
/// Smallest eigenvalue still counted as positive semidefinite.
pub const PSD_TOLERANCE: f64 = -1e-8;

/// A regression problem with one or two parameters.
pub trait ToyProblem: Sync {
    fn dim(&self) -> usize;
    /// Per-sample residual norms at `theta`.
    fn residuals(&self, theta: &[f64]) -> Vec<f64>;
}

/// Fits `sin(θ x)` to targets `sin(θ* x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinusoidToy {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl SinusoidToy {
    pub fn new(xs: Vec<f64>, theta_star: f64) -> Self {
        let ys = xs.iter().map(|x| (theta_star * x).sin()).collect();
        Self { xs, ys }
    }
}

impl Default for SinusoidToy {
    /// Nine inputs evenly spaced over `[−1, 1]`, `θ* = 1`.
    fn default() -> Self {
        Self::new(super::linear_grid(-1.0, 1.0, 9), 1.0)
    }
}

impl ToyProblem for SinusoidToy {
    fn dim(&self) -> usize {
        1
    }

    fn residuals(&self, theta: &[f64]) -> Vec<f64> {
        self.xs
            .iter()
            .zip(&self.ys)
            .map(|(x, y)| ((theta[0] * x).sin() - y).abs())
            .collect()
    }
}

/// `θ_0 x` (one parameter) or `θ_0 + θ_1 x` (two parameters) with squared
/// loss; convex everywhere for every λ.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearToy {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub intercept: bool,
}

impl ToyProblem for LinearToy {
    fn dim(&self) -> usize {
        if self.intercept {
            2
        } else {
            1
        }
    }

    fn residuals(&self, theta: &[f64]) -> Vec<f64> {
        self.xs
            .iter()
            .zip(&self.ys)
            .map(|(x, y)| {
                let pred = if self.intercept { theta[0] + theta[1] * x } else { theta[0] * x };
                (pred - y).abs()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityScan {
    pub lambdas: Vec<f64>,
    pub points: usize,
    /// Per λ, share of unflagged points where the RAE Hessian is PSD.
    pub psd_fraction: Vec<f64>,
    /// Per λ, the same share for the NRAE Hessian.
    pub nrae_psd_fraction: Vec<f64>,
    /// Share for the L_p error, which does not depend on λ.
    pub baseline_fraction: f64,
    /// Per λ, points excluded because a Hessian entry was not finite.
    pub flagged: Vec<usize>,
}

impl ConvexityScan {
    /// Spearman correlation between λ and the RAE PSD fraction.
    pub fn trend(&self) -> Option<f64> {
        spearman(&self.lambdas, &self.psd_fraction)
    }

    /// A constant sequence counts as monotone.
    pub fn is_monotone_trend(&self, min_spearman: f64) -> bool {
        let constant = self.psd_fraction.windows(2).all(|w| w[0] == w[1]);
        constant || self.trend().is_some_and(|s| s >= min_spearman)
    }

    pub fn fraction_at(&self, lambda: f64) -> Option<f64> {
        self.lambdas
            .iter()
            .position(|l| *l == lambda)
            .map(|i| self.psd_fraction[i])
    }
}

fn step_for(theta: f64) -> f64 {
    HESSIAN_STEP * theta.abs().max(1.0)
}

/// Hessian of `f` at `theta` by central second differences, or `None` when
/// an entry is not finite.
fn hessian(f: &dyn Fn(&[f64]) -> f64, theta: &[f64]) -> Option<Vec<Vec<f64>>> {
    let n = theta.len();
    let at = |delta: &[(usize, f64)]| {
        let mut p = theta.to_vec();
        for &(i, d) in delta {
            p[i] += d;
        }
        f(&p)
    };
    let center = at(&[]);
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        let hi = step_for(theta[i]);
        h[i][i] = (at(&[(i, hi)]) - 2.0 * center + at(&[(i, -hi)])) / (hi * hi);
        for j in 0..i {
            let hj = step_for(theta[j]);
            let v = (at(&[(i, hi), (j, hj)]) - at(&[(i, hi), (j, -hj)]) - at(&[(i, -hi), (j, hj)])
                + at(&[(i, -hi), (j, -hj)]))
                / (4.0 * hi * hj);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    h.iter().flatten().all(|v| v.is_finite()).then_some(h)
}

fn min_eigenvalue(h: &[Vec<f64>]) -> f64 {
    match h.len() {
        1 => h[0][0],
        2 => {
            let (a, b, c) = (h[0][0], h[0][1], h[1][1]);
            (a + c) / 2.0 - (((a - c) / 2.0).powi(2) + b * b).sqrt()
        }
        n => unreachable!("toy problems have 1 or 2 parameters, got {n}"),
    }
}

/// `Some(is_psd)` or `None` for a flagged point.
fn psd_at(f: &dyn Fn(&[f64]) -> f64, theta: &[f64]) -> Option<bool> {
    hessian(f, theta).map(|h| min_eigenvalue(&h) >= PSD_TOLERANCE)
}

fn fraction(results: &[Option<bool>]) -> (f64, usize) {
    let valid: Vec<bool> = results.iter().flatten().copied().collect();
    let flagged = results.len() - valid.len();
    let frac = if valid.is_empty() {
        0.0
    } else {
        valid.iter().filter(|v| **v).count() as f64 / valid.len() as f64
    };
    (frac, flagged)
}

fn residual_batch(toy: &dyn ToyProblem, theta: &[f64]) -> Option<ResidualBatch> {
    ResidualBatch::new(toy.residuals(theta)).ok()
}

fn log_rae_at(toy: &dyn ToyProblem, theta: &[f64], p: u32, q: u32, lambda: &ConvexityIndex) -> f64 {
    residual_batch(toy, theta)
        .and_then(|rb| loss::log_rae(&rb, p, q, lambda).ok())
        .unwrap_or(f64::NAN)
}

/// PSD fractions of the RAE, NRAE and L_p error over `points` for every λ.
pub fn convexity_scan<T: ToyProblem>(
    toy: &T,
    lambdas: &[f64],
    points: &[Vec<f64>],
    p: u32,
    q: u32,
) -> Result<ConvexityScan> {
    if lambdas.is_empty() || points.is_empty() {
        return Err(Error::Config("convexity scan needs a lambda grid and parameter points".into()));
    }
    if let Some(bad) = points.iter().find(|pt| pt.len() != toy.dim()) {
        return Err(Error::Dimension(format!(
            "parameter point has {} coordinates, toy has {}",
            bad.len(),
            toy.dim()
        )));
    }
    if !(1..=2).contains(&toy.dim()) {
        return Err(Error::Config(format!("toy dimension {} not in 1..=2", toy.dim())));
    }
    let lp = |theta: &[f64]| {
        residual_batch(toy, theta).map_or(f64::NAN, |rb| loss::lp_error(&rb, p))
    };
    let baseline: Vec<Option<bool>> = points.iter().map(|t| psd_at(&lp, t)).collect();
    let (baseline_fraction, _) = fraction(&baseline);

    let mut scan = ConvexityScan {
        lambdas: lambdas.to_vec(),
        points: points.len(),
        psd_fraction: Vec::with_capacity(lambdas.len()),
        nrae_psd_fraction: Vec::with_capacity(lambdas.len()),
        baseline_fraction,
        flagged: Vec::with_capacity(lambdas.len()),
    };
    for &l in lambdas {
        let lambda = ConvexityIndex::new(l, f64::MIN_POSITIVE)?;
        let lam_q = l.powi(q as i32);
        let mut rae = Vec::with_capacity(points.len());
        let mut nrae = Vec::with_capacity(points.len());
        for theta in points {
            let u0 = log_rae_at(toy, theta, p, q, &lambda);
            let ratio = |t: &[f64]| (log_rae_at(toy, t, p, q, &lambda) - u0).exp();
            let normalized = |t: &[f64]| log_rae_at(toy, t, p, q, &lambda) / lam_q;
            rae.push(if u0.is_finite() { psd_at(&ratio, theta) } else { None });
            nrae.push(psd_at(&normalized, theta));
        }
        let (frac, flagged) = fraction(&rae);
        scan.psd_fraction.push(frac);
        scan.flagged.push(flagged);
        scan.nrae_psd_fraction.push(fraction(&nrae).0);
    }
    Ok(scan)
}

/// Grid indices minimizing the stable NRAE and the literal RAE at λ.
///
/// The two objectives are monotone transforms of each other, so the
/// indices should agree; the literal path fails with an oracle-range error
/// where it would overflow.
pub fn shared_argmin<T: ToyProblem>(
    toy: &T,
    thetas: &[Vec<f64>],
    lambda: f64,
    p: u32,
    q: u32,
) -> Result<(usize, usize)> {
    if thetas.is_empty() {
        return Err(Error::Config("empty parameter grid".into()));
    }
    let index = ConvexityIndex::new(lambda, f64::MIN_POSITIVE)?;
    let mut best = (0, f64::INFINITY, 0, f64::INFINITY);
    for (i, theta) in thetas.iter().enumerate() {
        let rb = ResidualBatch::new(toy.residuals(theta))?;
        let stable = loss::nrae(&rb, p, q, &index)?;
        let naive = naive_rae(&rb, p, q, lambda)?;
        if stable < best.1 {
            best.0 = i;
            best.1 = stable;
        }
        if naive < best.3 {
            best.2 = i;
            best.3 = naive;
        }
    }
    Ok((best.0, best.2))
}
