use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Elementwise nonlinearities plus the row-wise softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
    Identity,
    /// Row-wise; only valid on the final layer.
    Softmax,
}

impl Activation {
    pub(crate) fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Sigmoid => z.mapv(sigmoid),
            Activation::Tanh => z.mapv(f64::tanh),
            Activation::Relu => z.mapv(|v| v.max(0.0)),
            Activation::Identity => z.clone(),
            Activation::Softmax => {
                let mut out = z.clone();
                for mut row in out.axis_iter_mut(Axis(0)) {
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    row.mapv_inplace(|v| (v - max).exp());
                    let total = row.sum();
                    row.mapv_inplace(|v| v / total);
                }
                out
            }
        }
    }

    /// `∂L/∂z` from `∂L/∂a`, given the cached `z` and `a = act(z)`.
    pub(crate) fn backward(self, z: &Array2<f64>, a: &Array2<f64>, grad: &ArrayView2<f64>) -> Array2<f64> {
        match self {
            Activation::Sigmoid => Zip::from(grad).and(a).map_collect(|g, a| g * a * (1.0 - a)),
            Activation::Tanh => Zip::from(grad).and(a).map_collect(|g, a| g * (1.0 - a * a)),
            Activation::Relu => Zip::from(grad)
                .and(z)
                .map_collect(|g, z| if *z > 0.0 { *g } else { 0.0 }),
            Activation::Identity => grad.to_owned(),
            Activation::Softmax => {
                let mut out = grad.to_owned();
                for (mut row, a_row) in out.axis_iter_mut(Axis(0)).zip(a.axis_iter(Axis(0))) {
                    let dot: f64 = row.iter().zip(a_row.iter()).map(|(g, a)| g * a).sum();
                    Zip::from(&mut row).and(&a_row).for_each(|g, a| *g = a * (*g - dot));
                }
                out
            }
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Sigmoid => 0,
            Activation::Tanh => 1,
            Activation::Relu => 2,
            Activation::Identity => 3,
            Activation::Softmax => 4,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Activation::Sigmoid,
            1 => Activation::Tanh,
            2 => Activation::Relu,
            3 => Activation::Identity,
            4 => Activation::Softmax,
            _ => return None,
        })
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
            Activation::Softmax => "softmax",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "identity" | "linear" => Ok(Activation::Identity),
            "softmax" => Ok(Activation::Softmax),
            other => Err(Error::Config(format!("unknown activation '{other}'"))),
        }
    }
}
