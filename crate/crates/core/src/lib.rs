//! Level profiles of random recursive trees.
//!
//! Simulation of uniform random recursive trees, the Crump–Mode–Jagers
//! process generated by a renewal sequence, closed-form moments of the
//! exponential case, the Gaussian limit process with covariance
//! `1/(u+v)`, and the statistics that connect them.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cmj_sim;
pub mod error;
pub mod exact_moments;
pub mod limit_process;
pub mod logvalue;
pub mod quadrature;
pub mod rng;
pub mod stat_verify;
pub mod tree_sim;

pub use error::{Error, Result};
pub use logvalue::LogValue;
