//! Classical quasi-Newton baseline: the weighted symmetric secant update,
//! BFGS, and a strong-Wolfe line search.

mod bfgs;
mod update;
mod wolfe;

pub use bfgs::{optimize_bfgs, BfgsParams, QuasiNewtonState};
pub use update::{bfgs_update, weighted_frobenius_sq, weighted_symmetric_update, BfgsUpdate};
pub use wolfe::{strong_wolfe_search, WolfeOutcome, WolfeParams};
