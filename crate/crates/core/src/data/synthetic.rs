//! Small deterministic classification sets for tests and smoke runs.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticKind {
    /// Two well-separated Gaussian clusters; linearly separable.
    Blobs,
    /// Two interleaved spiral arms; not linearly separable.
    Spirals,
    /// Four clusters on the corners of a square, labelled by XOR.
    Xor,
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntheticKind::Blobs => "blobs",
            SyntheticKind::Spirals => "spirals",
            SyntheticKind::Xor => "xor",
        })
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "blobs" => Ok(SyntheticKind::Blobs),
            "spirals" => Ok(SyntheticKind::Spirals),
            "xor" => Ok(SyntheticKind::Xor),
            other => Err(Error::Config(format!("unknown synthetic dataset '{other}'"))),
        }
    }
}

/// `m` two-dimensional points in `[0, 1]²` with binary labels.
///
/// Sample `i` belongs to class `i % 2` (cluster `i % 4` for XOR), so every
/// contiguous slice is close to balanced.
pub fn synthetic(kind: SyntheticKind, m: usize, seed: u64) -> Result<Dataset> {
    if m < 4 {
        return Err(Error::Config(format!("synthetic datasets need m >= 4, got {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Array2::zeros((m, 2));
    let mut labels = Vec::with_capacity(m);
    let normal = |sd: f64| Normal::new(0.0, sd).expect("positive sd");
    for i in 0..m {
        let (x, y, label) = match kind {
            SyntheticKind::Blobs => {
                let label = i % 2;
                let c = if label == 0 { 0.3 } else { 0.7 };
                let n = normal(0.05);
                (c + n.sample(&mut rng), c + n.sample(&mut rng), label)
            }
            SyntheticKind::Spirals => {
                let label = i % 2;
                let t: f64 = rng.random();
                let angle = 1.5 * PI * t + PI * label as f64;
                let radius = 0.05 + 0.4 * t;
                let n = normal(0.01);
                (
                    0.5 + radius * angle.cos() + n.sample(&mut rng),
                    0.5 + radius * angle.sin() + n.sample(&mut rng),
                    label,
                )
            }
            SyntheticKind::Xor => {
                let cluster = i % 4;
                let (cx, cy) = (cluster & 1, cluster >> 1);
                let n = normal(0.06);
                (
                    0.25 + 0.5 * cx as f64 + n.sample(&mut rng),
                    0.25 + 0.5 * cy as f64 + n.sample(&mut rng),
                    cx ^ cy,
                )
            }
        };
        inputs[[i, 0]] = x.clamp(0.0, 1.0);
        inputs[[i, 1]] = y.clamp(0.0, 1.0);
        labels.push(label);
    }
    Dataset::new(inputs, labels, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_bounded() {
        for kind in [SyntheticKind::Blobs, SyntheticKind::Spirals, SyntheticKind::Xor] {
            let a = synthetic(kind, 50, 3).unwrap();
            let b = synthetic(kind, 50, 3).unwrap();
            assert_eq!(a, b);
            assert!(a.inputs().iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(a.labels().iter().all(|l| *l < 2));
            assert_ne!(a, synthetic(kind, 50, 4).unwrap());
        }
        assert!(synthetic(SyntheticKind::Xor, 3, 0).is_err());
    }

    #[test]
    fn blobs_are_linearly_separable() {
        let ds = synthetic(SyntheticKind::Blobs, 400, 11).unwrap();
        // The line x + y = 1 separates the two cluster centres.
        for (row, label) in ds.inputs().rows().into_iter().zip(ds.labels()) {
            let side = usize::from(row[0] + row[1] > 1.0);
            assert_eq!(side, *label);
        }
    }
}
