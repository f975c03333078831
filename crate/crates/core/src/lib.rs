//! Noise-robust classifier training on noisily labeled data.
//!
//! The training loop identifies irrelevant (open-set) noisy samples by how
//! unstable the network's predictions for them are across epochs, drops the
//! most unstable fraction on a ramped schedule chosen over the *whole*
//! training set, and trains what remains with a cosine-normalized softmax
//! head under label smoothing. Baseline pipelines (no correction, small-loss
//! selection, per-mini-batch selection) run the same machinery for
//! comparisons, and a synthetic fine-grained data generator with controllable
//! close-set/open-set noise makes everything testable end to end.

pub mod data;
pub mod error;
pub mod loss;
pub mod model;
pub mod optim;
pub mod report;
pub mod runfiles;
pub mod selection;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
