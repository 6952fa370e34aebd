//! The user guide under `book/`, compiled so that its Rust snippets run as
//! doc-tests against the current library.
#![doc = include_str!("../../../book/src/introduction.md")]

#[doc = include_str!("../../../book/src/loss-family.md")]
pub mod loss_family {}

#[doc = include_str!("../../../book/src/gradients.md")]
pub mod gradients {}

#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}

#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}

#[doc = include_str!("../../../book/src/mnist.md")]
pub mod mnist {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[doc = include_str!("../../../README.md")]
pub mod readme {}
