//! Successful coupling of backward renewal processes and computable
//! polynomial convergence-rate bounds in total variation.
//!
//! The crate is organised bottom-up:
//!
//! * [`dist`]: lifetime laws `F`, residual laws `F_a`, the stationary
//!   backward law and the common part of two densities;
//! * [`lemma`]: decomposition of two laws into a common and two residual
//!   parts, with the three-uniform coupled sampler;
//! * [`renewal`]: exact event-driven simulation of a delayed renewal process
//!   and its backward/forward recurrence times;
//! * [`chain`]: the coupled pair of backward processes and its coupling time;
//! * [`bounds`]: Lorden's constant, `kappa_R`, the series constants and the
//!   total-variation bound `2 K(alpha, b1) / t^alpha`;
//! * [`estimators`]: Monte Carlo estimates the bounds must dominate;
//! * [`cli`]: the command-line front end.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod chain;
pub mod cli;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod lemma;
pub mod quad;
pub mod renewal;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
