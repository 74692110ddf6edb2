//! Newton-type optimisers for cost functions that can only be observed
//! through noisy evaluations of the value and gradient.
//!
//! * [`hessian_gp`]: quasi-Newton iteration with a Gaussian-process belief
//!   over the half-vectorised Hessian, learned from gradient differences.
//! * [`surrogate_gp`]: a global GP surrogate over cost, gradient and Hessian,
//!   minimised with a safeguarded Newton search.
//! * [`classic_qn`]: BFGS / weighted symmetric secant updates as a baseline.
//! * [`problems`]: noisy oracles, including Kalman-filter and particle-filter
//!   likelihoods for state-space identification.
//! * [`harness`]: seeded Monte-Carlo experiments with CSV output.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classic_qn;
pub mod error;
pub mod gp_core;
pub mod harness;
pub mod hessian_gp;
pub mod problems;
pub mod surrogate_gp;
pub mod trace;

pub use error::{Error, Result};
pub use trace::{IterStatus, IterateRecord, OptimizationTrace, Termination};
