//! The Hessian-belief quasi-Newton loop.

use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use super::belief::{update_belief, HessianBelief, LineSegment};
use super::direction::safeguarded_direction;
use super::line_search::{noisy_line_search, NoisyLineSearchParams};
use crate::error::{Error, Result};
use crate::problems::{estimate_noise, Evaluation, NoiseLevels, NoisyOracle};
use crate::trace::{IterStatus, IterateRecord, OptimizationTrace, Termination};

/// Stop once the mean of `‖ĝ‖` over the last `window` iterates is below
/// `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStop {
    pub window: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerParams {
    pub max_iters: usize,
    pub line_search: NoisyLineSearchParams,
    /// Eigenvalue floor of the direction safeguard, relative to `max(|λ|, 1)`.
    pub floor_ratio: f64,
    /// Gauss–Legendre nodes per dimension for the line integrals.
    pub quad_nodes: usize,
    /// Lower bound on the diagonal of `R`.
    pub obs_noise_floor: f64,
    /// Oracle calls used to estimate noise when the oracle declares none.
    pub noise_samples: usize,
    /// Disabled by default: the loop runs to `max_iters`.
    pub early_stop: Option<EarlyStop>,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            max_iters: 100,
            line_search: NoisyLineSearchParams::default(),
            floor_ratio: 1e-6,
            quad_nodes: 20,
            obs_noise_floor: 1e-10,
            noise_samples: 10,
            early_stop: None,
        }
    }
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        self.line_search.validate()?;
        if self.quad_nodes < 2 {
            return Err(Error::InvalidArgument(
                "quad_nodes must be at least 2".into(),
            ));
        }
        if !(self.floor_ratio > 0.0) || !(self.obs_noise_floor >= 0.0) {
            return Err(Error::InvalidArgument(
                "floor_ratio must be positive and obs_noise_floor non-negative".into(),
            ));
        }
        if let Some(es) = self.early_stop {
            if es.window == 0 {
                return Err(Error::InvalidArgument(
                    "early-stop window must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Runs the Hessian-belief quasi-Newton method from `x0`.
///
/// Errors from the oracle or the belief update end the run; the trace up to
/// that point is returned with [`Termination::Failed`].
pub fn optimize_alg1(
    oracle: &dyn NoisyOracle,
    x0: &DVector<f64>,
    belief0: &HessianBelief,
    params: &OptimizerParams,
    rng: &mut dyn RngCore,
) -> OptimizationTrace {
    let mut trace = OptimizationTrace::new(header(belief0, params));
    if let Err(e) = run(oracle, x0, belief0, params, rng, &mut trace) {
        trace.termination = Termination::Failed(e);
    }
    trace
}

fn header(belief: &HessianBelief, params: &OptimizerParams) -> Vec<(String, String)> {
    let fmt = |v: &DMatrix<f64>| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    vec![
        ("optimizer".into(), "alg1_hessian_gp".into()),
        ("b1".into(), fmt(&belief.hessian())),
        ("c1".into(), fmt(&belief.cov)),
        ("v".into(), fmt(belief.kernel.inv_lengthscale())),
        ("sigma_sq".into(), belief.kernel.sigma_sq().to_string()),
        ("max_iters".into(), params.max_iters.to_string()),
        ("quad_nodes".into(), params.quad_nodes.to_string()),
    ]
}

fn run(
    oracle: &dyn NoisyOracle,
    x0: &DVector<f64>,
    belief0: &HessianBelief,
    params: &OptimizerParams,
    rng: &mut dyn RngCore,
    trace: &mut OptimizationTrace,
) -> Result<()> {
    params.validate()?;
    if x0.len() != oracle.dim() || x0.len() != belief0.dim() || x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "initial point must be finite and match the oracle dimension".into(),
        ));
    }
    let n = x0.len();
    let noise = match oracle.declared_noise() {
        Some(levels) => levels,
        None => {
            trace.evaluations += params.noise_samples;
            estimate_noise(oracle, x0, params.noise_samples, rng)?
        }
    };
    let r = observation_noise(&noise, params.obs_noise_floor, n);
    let mut belief = belief0.clone().with_obs_noise(r);

    let mut x = x0.clone();
    let mut eval = oracle.evaluate(&x, rng)?.checked()?;
    trace.evaluations += 1;
    trace.push(IterateRecord {
        iteration: 0,
        x: x.clone(),
        cost: eval.cost,
        grad_norm: eval.grad.norm(),
        step: 0.0,
        status: IterStatus::Start,
        hessian_vech: Some(belief.mean.clone()),
    });

    for k in 1..=params.max_iters {
        let p = safeguarded_direction(&belief.hessian(), &eval.grad, params.floor_ratio);
        if p.iter().all(|&v| v == 0.0) {
            trace.termination = Termination::Converged;
            return Ok(());
        }
        let ls = noisy_line_search(
            oracle,
            &x,
            &p,
            eval.cost,
            &eval.grad,
            noise.cost_sd,
            &params.line_search,
            rng,
        )?;
        trace.evaluations += ls.trials;
        let Evaluation { cost, grad } = ls.eval;
        let mut status = if ls.accepted {
            IterStatus::Accepted
        } else {
            IterStatus::Fallback
        };
        let y = &grad - &eval.grad;
        match LineSegment::new(x.clone(), ls.x.clone(), y.clone()) {
            Ok(seg) => belief = update_belief(&belief, &seg, &y, params.quad_nodes)?,
            Err(_) => status = IterStatus::SkippedUpdate,
        }
        x = ls.x;
        eval = Evaluation { cost, grad };
        trace.push(IterateRecord {
            iteration: k,
            x: x.clone(),
            cost: eval.cost,
            grad_norm: eval.grad.norm(),
            step: ls.alpha,
            status,
            hessian_vech: Some(belief.mean.clone()),
        });
        if let Some(es) = params.early_stop {
            if early_stop_reached(trace, es) {
                trace.termination = Termination::Converged;
                return Ok(());
            }
        }
    }
    trace.termination = Termination::MaxIterations;
    Ok(())
}

/// `R = Σ_g,prev + Σ_g,curr`, with the diagonal floored.
fn observation_noise(noise: &NoiseLevels, floor: f64, n: usize) -> DMatrix<f64> {
    let mut r = &noise.grad_cov * 2.0;
    for i in 0..n {
        r[(i, i)] = r[(i, i)].max(floor);
    }
    r
}

fn early_stop_reached(trace: &OptimizationTrace, es: EarlyStop) -> bool {
    let recs = &trace.records;
    if recs.len() < es.window {
        return false;
    }
    let mean = recs[recs.len() - es.window..]
        .iter()
        .map(|r| r.grad_norm)
        .sum::<f64>()
        / es.window as f64;
    mean < es.threshold
}
