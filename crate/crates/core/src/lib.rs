//! Adaptive normalized risk-averting training.
//!
//! The normalized risk-averting error (NRAE) of a batch of residual norms
//! `e_i` is `log((1/m) Σ exp(λ^q e_i^p)) / λ^q`. It equals the mean `L_p`
//! error as `λ → 0`, the worst-case error as `λ → ∞`, and lies between them
//! for every λ. Adaptive training treats λ as a parameter and descends on
//! `NRAE + a λ^(−r)` jointly with the network weights.
//!
//! ```
//! use anrat::loss::{nrae, lp_error, minimax_error, ConvexityIndex, ResidualBatch};
//!
//! let rb = ResidualBatch::new(vec![0.5, 1.0])?;
//! let lambda = ConvexityIndex::with_default_floor(2.0)?;
//! let v = nrae(&rb, 2, 2, &lambda)?;
//! assert!(lp_error(&rb, 2) <= v && v <= minimax_error(&rb, 2));
//! # Ok::<(), anrat::Error>(())
//! ```
//!
//! Modules:
//!
//! - [`loss`]: the loss family, sample weights and gradients.
//! - [`nn`]: dense networks with explicit forward traces and backprop.
//! - [`train`]: mini-batch SGD on weights and λ, baselines, grid search.
//! - [`data`]: MNIST IDX files, splits, synthetic sets, checksum manifests.
//! - [`verify`]: finite-difference and literal-formula oracles, scans.
//! - [`report`]: CSV/JSON artifacts and atomic writes.

pub mod data;
pub mod error;
pub mod loss;
pub mod nn;
pub mod report;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
