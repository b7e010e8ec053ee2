//! Stein's method for Laplace approximation: explicit Stein solutions, the
//! centered equilibrium transform, distance estimators and the error bounds
//! for geometric and beta-normalised random sums.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bounds;
pub mod distributions;
pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod quad;
pub mod rng;
pub mod solve;
pub mod specfun;
pub mod stein_chi;
pub mod stein_laplace;

pub use error::{Error, Result};
