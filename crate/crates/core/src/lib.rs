//! Training and evaluation laboratory for edge-pruning subgraph selection
//! under distribution shift.
//!
//! The crate bundles a small reverse-mode autodiff engine, GIN/GCN message
//! passing with per-edge weights, a Gumbel-Softmax edge selector with
//! straight-through sampling, size and probability-alignment regularizers,
//! a synthetic motif-on-base dataset generator with controllable shifts, a
//! deterministic trainer, and the selector-quality metric suite.

pub mod autodiff;
pub mod encoder;
pub mod error;
pub mod graph;
pub mod losses;
pub mod model;
pub mod par;
pub mod metrics;
pub mod rng;
pub mod selector;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
