//! Binary model snapshots.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes   "ANRATNN\0"
//! version    u32       1
//! input_dim  u32
//! layers     u32
//! per layer:
//!   fan_in     u32
//!   fan_out    u32
//!   activation u8      0 sigmoid, 1 tanh, 2 relu, 3 identity, 4 softmax
//!   weights    fan_in * fan_out f64, row-major
//!   bias       fan_out f64
//! ```
//!
//! Floats are stored by bit pattern, so a decode of an encode is bit-exact.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Activation, DenseLayer, MlpModel};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"ANRATNN\0";
pub const VERSION: u32 = 1;

pub fn encode(model: &MlpModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + model.parameter_count() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(model.input_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(model.layers().len() as u32).to_le_bytes());
    for layer in model.layers() {
        out.extend_from_slice(&(layer.fan_in() as u32).to_le_bytes());
        out.extend_from_slice(&(layer.fan_out() as u32).to_le_bytes());
        out.push(layer.activation().code());
        for v in layer.weights().iter().chain(layer.bias().iter()) {
            out.extend_from_slice(&v.to_bits().to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or(
            Error::Length {
                expected: self.pos.saturating_add(n),
                found: self.bytes.len(),
            },
        )?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Snapshot("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect())
    }
}

pub fn decode(bytes: &[u8]) -> Result<MlpModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let input_dim = r.u32()? as usize;
    let count = r.u32()? as usize;
    let mut layers = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let fan_in = r.u32()? as usize;
        let fan_out = r.u32()? as usize;
        let code = r.take(1)?[0];
        let activation = Activation::from_code(code)
            .ok_or_else(|| Error::Snapshot(format!("unknown activation code {code}")))?;
        let weights = Array2::from_shape_vec((fan_in, fan_out), r.f64s(fan_in * fan_out)?)
            .map_err(|e| Error::Snapshot(e.to_string()))?;
        let bias = Array1::from(r.f64s(fan_out)?);
        layers.push(DenseLayer::new(weights, bias, activation)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Snapshot(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    MlpModel::new(input_dim, layers)
}

pub fn save(model: &MlpModel, path: &Path) -> Result<()> {
    crate::report::write_atomic(path, &encode(model))
}

pub fn load(path: &Path) -> Result<MlpModel> {
    decode(&std::fs::read(path)?)
}
