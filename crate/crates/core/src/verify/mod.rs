//! Independent oracles and property probes for the loss family.
//!
//! Nothing here shares code with the evaluation paths it checks: gradients
//! are compared against central finite differences, the stable NRAE against
//! the literal exponential formula, and convexity claims against numeric
//! Hessians on small toy problems.

mod convexity;
mod gradcheck;

pub use convexity::{convexity_scan, shared_argmin, ConvexityScan, LinearToy, SinusoidToy, ToyProblem};
pub use gradcheck::{gradcheck_suite, GradCheckSummary, GradFixture};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::loss::{self, ConvexityIndex, ResidualBatch, DEFAULT_LAMBDA_MIN};

/// Largest exponent the naive oracle will pass to `exp`.
pub const NAIVE_EXPONENT_LIMIT: f64 = 700.0;

/// Outcome of comparing an analytic gradient with a numeric one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    /// Largest `|a − n| / max(|a|, |n|, floor)` over coordinates.
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub tolerance: f64,
    pub passed: bool,
}

impl GradCheckReport {
    /// Compares coordinatewise. `floor` keeps near-zero components from
    /// turning finite-difference noise into large relative errors.
    pub fn compare(analytic: &[f64], numeric: &[f64], floor: f64, tolerance: f64) -> Result<Self> {
        if analytic.len() != numeric.len() {
            return Err(Error::Length {
                expected: analytic.len(),
                found: numeric.len(),
            });
        }
        let mut max_rel_error = 0.0;
        let mut worst_index = 0;
        for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(floor);
            // NaN compares false, so it must be promoted explicitly.
            if rel.is_nan() || rel > max_rel_error {
                max_rel_error = if rel.is_nan() { f64::INFINITY } else { rel };
                worst_index = i;
            }
        }
        Ok(Self {
            max_rel_error,
            worst_index,
            tolerance,
            passed: max_rel_error < tolerance,
        })
    }
}

/// Central differences `(f(x + h e_i) − f(x − h e_i)) / 2h` with step `h`
/// in every coordinate.
pub fn fd_grad(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Result<Vec<f64>> {
    fd_grad_with(|point| Ok(f(point)), x, |_| h)
}

/// [`fd_grad`] with a per-coordinate step and a fallible objective.
pub fn fd_grad_with(
    mut f: impl FnMut(&[f64]) -> Result<f64>,
    x: &[f64],
    step: impl Fn(usize) -> f64,
) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = step(i);
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Config(format!("finite-difference step {h} at coordinate {i}")));
        }
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        probe[i] = x[i] - h;
        let down = f(&probe)?;
        probe[i] = x[i];
        if !(up.is_finite() && down.is_finite()) {
            return Err(Error::NonFinite(format!("objective probe at coordinate {i}")));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Literal `(1/λ^q) log((1/m) Σ exp(λ^q e_i^p))`.
///
/// Refuses inputs whose largest exponent reaches [`NAIVE_EXPONENT_LIMIT`].
pub fn naive_nrae(rb: &ResidualBatch, p: u32, q: u32, lambda: f64) -> Result<f64> {
    let lam_q = lambda.powi(q as i32);
    Ok(naive_rae(rb, p, q, lambda)?.ln() / lam_q)
}

/// Literal `(1/m) Σ exp(λ^q e_i^p)`, under the same range limit as
/// [`naive_nrae`].
pub fn naive_rae(rb: &ResidualBatch, p: u32, q: u32, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
    }
    let lam_q = lambda.powi(q as i32);
    let exponents: Vec<f64> = rb.norms().iter().map(|e| lam_q * e.powi(p as i32)).collect();
    let largest = exponents.iter().copied().fold(0.0, f64::max);
    if largest >= NAIVE_EXPONENT_LIMIT {
        return Err(Error::OracleRange(format!(
            "exponent {largest:.3e} reaches the limit {NAIVE_EXPONENT_LIMIT}"
        )));
    }
    Ok(exponents.iter().map(|x| x.exp()).sum::<f64>() / rb.len() as f64)
}

/// NRAE at each λ of a strictly increasing grid bounded below by the
/// default λ floor.
pub fn lambda_scan(rb: &ResidualBatch, p: u32, q: u32, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::Config("empty lambda grid".into()));
    }
    if grid[0] < DEFAULT_LAMBDA_MIN {
        return Err(Error::Config(format!(
            "lambda grid starts at {} below the floor {DEFAULT_LAMBDA_MIN}",
            grid[0]
        )));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("lambda grid must be strictly increasing".into()));
    }
    grid.iter()
        .map(|&l| loss::nrae(rb, p, q, &ConvexityIndex::new(l, DEFAULT_LAMBDA_MIN)?))
        .collect()
}

/// Allowed decrease between consecutive scan values, and slack on the
/// `[L_p, minimax]` bracket.
pub const SCAN_TOLERANCE: f64 = 1e-12;

/// One residual batch scanned over the λ grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaScanCase {
    pub norms: Vec<f64>,
    pub values: Vec<f64>,
    pub lp_error: f64,
    pub minimax_error: f64,
    /// Largest decrease between consecutive grid points, 0 if none.
    pub max_drop: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaScanSummary {
    pub grid: Vec<f64>,
    pub cases: Vec<LambdaScanCase>,
    pub max_drop: f64,
    pub passed: bool,
}

/// Scans `batches` random residual batches (1 to 20 norms, uniform in
/// `[0, 3]`) over `grid`. A case passes when the curve never drops by more
/// than [`SCAN_TOLERANCE`] and stays between the L_p and minimax errors.
pub fn lambda_scan_suite(batches: usize, seed: u64, grid: &[f64], p: u32, q: u32) -> Result<LambdaScanSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(batches);
    for _ in 0..batches {
        let m = rng.random_range(1..=20);
        let norms: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..3.0)).collect();
        let rb = ResidualBatch::new(norms.clone())?;
        let values = lambda_scan(&rb, p, q, grid)?;
        let lp_error = loss::lp_error(&rb, p);
        let minimax_error = loss::minimax_error(&rb, p);
        let max_drop = values.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
        let bracketed = values
            .iter()
            .all(|v| *v >= lp_error - SCAN_TOLERANCE && *v <= minimax_error + SCAN_TOLERANCE);
        cases.push(LambdaScanCase {
            norms,
            values,
            lp_error,
            minimax_error,
            max_drop,
            passed: max_drop <= SCAN_TOLERANCE && bracketed,
        });
    }
    Ok(LambdaScanSummary {
        grid: grid.to_vec(),
        max_drop: cases.iter().map(|c| c.max_drop).fold(0.0, f64::max),
        passed: cases.iter().all(|c| c.passed),
        cases,
    })
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    _ if i == n - 1 => hi,
                    _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with tied values sharing their average rank.
///
/// `None` when either side is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests;
