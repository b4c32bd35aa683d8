//! Continual learning with elastic weight consolidation.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: a small deterministic f64 network engine (dense, conv, pooling,
//!   softmax cross-entropy, SGD/Adam, global-norm clipping).
//! - [`data`]: IDX ingestion and the permuted / rotated task sequences.
//! - [`importance`]: per-weight importance maps (Fisher diagonal, MAS, SI,
//!   total absolute signal) and their accumulation across tasks.
//! - [`consolidation`]: the quadratic EWC penalty and its stabilized form.
//! - [`experiments`]: sequential training, λ sweeps with t-intervals, and
//!   pruning-degradation curves.

// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod consolidation;
pub mod data;
pub mod error;
pub mod experiments;
pub mod importance;
pub mod nn;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
