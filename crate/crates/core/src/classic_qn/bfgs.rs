//! Textbook BFGS on the raw oracle.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::RngCore;

use super::update::bfgs_update;
use super::wolfe::{strong_wolfe_search, WolfeParams};
use crate::error::{Error, Result};
use crate::problems::NoisyOracle;
use crate::trace::{IterStatus, IterateRecord, OptimizationTrace, Termination};

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsParams {
    pub max_iters: usize,
    /// Stop when `‖ĝ‖` falls below this.
    pub grad_tol: f64,
    pub wolfe: WolfeParams,
}

impl Default for BfgsParams {
    fn default() -> Self {
        Self {
            max_iters: 100,
            grad_tol: 1e-8,
            wolfe: WolfeParams::default(),
        }
    }
}

/// State carried between BFGS iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiNewtonState {
    pub b: DMatrix<f64>,
    pub x: DVector<f64>,
    pub g: DVector<f64>,
}

/// BFGS with a strong-Wolfe line search applied directly to the oracle.
///
/// A failed line search ends the run with [`Termination::LineSearchFailure`]
/// and an `ls_failed` record at the last accepted point.
pub fn optimize_bfgs(
    oracle: &dyn NoisyOracle,
    x0: &DVector<f64>,
    params: &BfgsParams,
    rng: &mut dyn RngCore,
) -> OptimizationTrace {
    let header = vec![
        ("optimizer".to_string(), "classic_bfgs".to_string()),
        ("c1".to_string(), params.wolfe.c1.to_string()),
        ("c2".to_string(), params.wolfe.c2.to_string()),
        ("max_iters".to_string(), params.max_iters.to_string()),
    ];
    let mut trace = OptimizationTrace::new(header);
    if let Err(e) = run(oracle, x0, params, rng, &mut trace) {
        trace.termination = Termination::Failed(e);
    }
    trace
}

fn run(
    oracle: &dyn NoisyOracle,
    x0: &DVector<f64>,
    params: &BfgsParams,
    rng: &mut dyn RngCore,
    trace: &mut OptimizationTrace,
) -> Result<()> {
    let n = oracle.dim();
    if x0.len() != n {
        return Err(Error::InvalidArgument(
            "initial point has wrong dimension".into(),
        ));
    }
    let eval0 = oracle.evaluate(x0, rng)?.checked()?;
    trace.evaluations += 1;
    let mut f = eval0.cost;
    let mut state = QuasiNewtonState {
        b: DMatrix::identity(n, n),
        x: x0.clone(),
        g: eval0.grad,
    };
    trace.push(IterateRecord {
        iteration: 0,
        x: state.x.clone(),
        cost: f,
        grad_norm: state.g.norm(),
        step: 0.0,
        status: IterStatus::Start,
        hessian_vech: None,
    });
    let mut scaled = false;
    for k in 1..=params.max_iters {
        if state.g.norm() < params.grad_tol {
            trace.termination = Termination::Converged;
            return Ok(());
        }
        let p = match Cholesky::new(state.b.clone()) {
            Some(ch) => -ch.solve(&state.g),
            None => -state.g.clone(),
        };
        let ls =
            match strong_wolfe_search(oracle, &state.x, &p, f, &state.g, 1.0, &params.wolfe, rng) {
                Ok(ls) => ls,
                Err(Error::LineSearch { trials }) => {
                    trace.evaluations += trials;
                    trace.push(IterateRecord {
                        iteration: k,
                        x: state.x.clone(),
                        cost: f,
                        grad_norm: state.g.norm(),
                        step: 0.0,
                        status: IterStatus::LineSearchFailed,
                        hessian_vech: None,
                    });
                    trace.termination = Termination::LineSearchFailure;
                    return Ok(());
                }
                Err(e) => return Err(e),
            };
        trace.evaluations += ls.evals;
        let s = &ls.x - &state.x;
        let y = &ls.eval.grad - &state.g;
        if !scaled {
            // Rescale the identity before the first update.
            let ys = y.dot(&s);
            let yy = y.dot(&y);
            if ys > 0.0 && yy > 0.0 {
                state.b = DMatrix::identity(n, n) * (yy / ys);
            }
            scaled = true;
        }
        let up = bfgs_update(&state.b, &s, &y);
        state.b = up.matrix;
        state.x = ls.x;
        state.g = ls.eval.grad;
        f = ls.eval.cost;
        trace.push(IterateRecord {
            iteration: k,
            x: state.x.clone(),
            cost: f,
            grad_norm: state.g.norm(),
            step: ls.alpha,
            status: if up.skipped {
                IterStatus::SkippedUpdate
            } else {
                IterStatus::Accepted
            },
            hessian_vech: None,
        });
    }
    trace.termination = if state.g.norm() < params.grad_tol {
        Termination::Converged
    } else {
        Termination::MaxIterations
    };
    Ok(())
}
