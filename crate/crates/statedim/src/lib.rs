//! Random-matrix theory for estimating the minimal state dimension of
//! high-dimensional time series observed in additive noise.

// Argument checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod experiment_runner;
pub mod hankel_stats;
pub mod linalg;
pub mod noise_equivalents;
pub mod persist;
pub mod spike_oracle;
pub mod state_space;

pub use error::{Error, Result};
