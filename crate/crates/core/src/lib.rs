//! Numerical core for a multitask multimodal semantic communication lab.
//!
//! Provides a minimal reverse-mode autodiff engine over dense 2-D tensors,
//! the encoder/fusion/decoder model family, a Rayleigh/AWGN channel that
//! sits inside the training graph, loss functions and evaluation metrics,
//! and FLOPs accounting for the model variants.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats and the CLI
//! live in the companion `semcom` crate.

#![no_std]

extern crate alloc;

pub mod adam;
pub mod channel;
pub mod error;
pub mod flops;
pub mod graph;
pub mod gradcheck;
pub mod model;
pub mod objectives;
pub mod rng;
pub mod tensor;

pub use error::Error;
pub use graph::{Graph, NodeId};
pub use tensor::Tensor;

pub type Result<T> = core::result::Result<T, Error>;
