//! Gravity optimizer toolkit.
//!
//! The crate is organised around a handful of modules:
//!
//! - [`optim`]: the Gravity update rule and baseline optimizers (GD, momentum,
//!   RMSProp, Adam) behind the common [`optim::Optimizer`] trait.
//! - [`nn`]: a small dense feed-forward network with hand-written
//!   backpropagation and a finite-difference gradient checker.
//! - [`objectives`]: analytic test functions with closed-form gradients.
//! - [`data`]: IDX (MNIST-family) ingestion, synthetic data and seeded batching.
//! - [`harness`]: the reproducible training loop and CSV metric logs.
//!
//! All numerics run in `f64`. A single training run is sequential so that
//! identical configurations produce bit-identical logs; batch evaluation,
//! gradient checks and multi-run comparisons fan out over rayon when the
//! `parallel` feature is enabled (the default).

pub mod data;
pub mod error;
pub mod exec;
pub mod harness;
mod linalg;
pub mod nn;
pub mod objectives;
pub mod optim;
pub mod seed;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
