//! Analytic denoisers for diffusion models, linear distillation, sampling
//! and the diagnostics built on top of them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod denoise;
pub mod distill;
pub mod error;
pub mod jacobian;
mod linalg;
pub mod metrics;
pub mod optim;
pub mod rng;
pub mod sampler;
pub mod toy;

pub use error::{Error, PluginError, Result};
