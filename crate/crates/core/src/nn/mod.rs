//! Minimal deterministic network engine.
//!
//! Parameters of every layer live in one flat `Vec<f64>` owned by
//! [`Network`]; gradients, importance maps and consolidated snapshots all
//! share that indexing.

mod clip;
mod layer;
mod loss;
mod network;
mod optim;

pub use clip::clip_global_norm;
pub use layer::{LayerSpec, ParamSlot};
pub use loss::{argmax_row, log_softmax_row, softmax_row, LossKind};
pub use network::{GradientVector, Network, Reduction, Trace};
pub use optim::{AdamConfig, Optimizer};
