//! Backtracking line search with an Armijo test relaxed by the cost noise.

use nalgebra::DVector;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::problems::{Evaluation, NoisyOracle};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyLineSearchParams {
    /// Armijo sufficient-decrease constant, in `(0, 1)`.
    pub c1: f64,
    /// Multiple of the cost-noise standard deviation added to the Armijo bound.
    pub noise_margin: f64,
    /// Step shrink factor, in `(0, 1)`.
    pub backtrack: f64,
    pub max_trials: usize,
}

impl Default for NoisyLineSearchParams {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            noise_margin: 2.0,
            backtrack: 0.5,
            max_trials: 30,
        }
    }
}

impl NoisyLineSearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c1 < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "c1 = {} not in (0, 1)",
                self.c1
            )));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "backtrack factor = {} not in (0, 1)",
                self.backtrack
            )));
        }
        if self.max_trials == 0 || !(self.noise_margin >= 0.0) {
            return Err(Error::InvalidArgument(
                "line search needs at least one trial and a non-negative noise margin".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub x: DVector<f64>,
    /// Oracle output at `x`, for reuse by the caller.
    pub eval: Evaluation,
    /// `false` when no trial met the relaxed Armijo test.
    pub accepted: bool,
    pub trials: usize,
}

/// Tries `α = 1, β, β², …` and accepts the first trial with
/// `f̂(x + αp) ≤ f̂(x) + c₁ α gᵀp + κ σ_c`. Without an acceptable trial the
/// one with the smallest observed cost is returned.
///
/// Trials the oracle cannot evaluate (outside its domain, a degenerate
/// particle filter, a numerical failure) count as rejected; non-finite output
/// is an error.
#[allow(clippy::too_many_arguments)]
pub fn noisy_line_search(
    oracle: &dyn NoisyOracle,
    x: &DVector<f64>,
    p: &DVector<f64>,
    f_x: f64,
    g_x: &DVector<f64>,
    cost_sd: f64,
    params: &NoisyLineSearchParams,
    rng: &mut dyn RngCore,
) -> Result<LineSearchOutcome> {
    params.validate()?;
    let slope = g_x.dot(p);
    let relax = params.noise_margin * cost_sd;
    let mut alpha = 1.0;
    let mut best: Option<LineSearchOutcome> = None;
    let mut last_err = None;
    for trial in 1..=params.max_trials {
        let x_new = x + p * alpha;
        match oracle.evaluate(&x_new, rng) {
            Ok(eval) => {
                let eval = eval.checked()?;
                if eval.cost <= f_x + params.c1 * alpha * slope + relax {
                    return Ok(LineSearchOutcome {
                        alpha,
                        x: x_new,
                        eval,
                        accepted: true,
                        trials: trial,
                    });
                }
                if best.as_ref().is_none_or(|b| eval.cost < b.eval.cost) {
                    best = Some(LineSearchOutcome {
                        alpha,
                        x: x_new,
                        eval,
                        accepted: false,
                        trials: 0,
                    });
                }
            }
            Err(e @ (Error::Domain(_) | Error::Degeneracy { .. } | Error::Numerical(_))) => {
                last_err = Some(e)
            }
            Err(e) => return Err(e),
        }
        alpha *= params.backtrack;
    }
    match best {
        Some(mut b) => {
            b.trials = params.max_trials;
            Ok(b)
        }
        None => Err(last_err.unwrap_or(Error::LineSearch {
            trials: params.max_trials,
        })),
    }
}
