//! Safeguarded Newton search on the surrogate mean.

use nalgebra::DVector;

use super::dataset::SurrogateDataset;
use crate::error::{Error, Result};
use crate::hessian_gp::safeguarded_direction;

#[derive(Debug, Clone, PartialEq)]
pub struct InnerParams {
    /// Newton steps per call.
    pub max_steps: usize,
    /// Eigenvalue floor of the direction safeguard, relative to `max(|λ|, 1)`.
    pub floor_ratio: f64,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Upper bound on `sqrt(pᵀ V p)` for one step, i.e. on the step length in
    /// kernel length-scales. Far from the data the zero-mean surrogate
    /// flattens out and an unbounded step would chase that artefact.
    pub max_step: f64,
    /// Stop once the surrogate gradient norm is at or below this.
    pub grad_tol: f64,
}

impl Default for InnerParams {
    fn default() -> Self {
        Self {
            max_steps: 20,
            floor_ratio: 1e-6,
            c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 40,
            max_step: 1.0,
            grad_tol: 0.0,
        }
    }
}

impl InnerParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.floor_ratio > 0.0
            && self.c1 > 0.0
            && self.c1 < 1.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.max_step > 0.0
            && self.grad_tol >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid inner search parameters: {self:?}"
            )))
        }
    }
}

/// Result of one inner search.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerOutcome {
    /// Visited iterate with the lowest final surrogate mean.
    pub x_min: DVector<f64>,
    pub f_min: f64,
    /// Accepted Newton steps.
    pub steps: usize,
}

/// Minimises the surrogate mean from `x_start` without touching the data.
pub fn inner_minimize(
    dataset: &SurrogateDataset,
    x_start: &DVector<f64>,
    params: &InnerParams,
) -> Result<InnerOutcome> {
    let mut ds = dataset.clone();
    inner_minimize_with(&mut ds, x_start, params, |_, _| Ok(()))
}

/// Like [`inner_minimize`], but calls `on_accept` with every accepted iterate
/// so that new observations can be added before the next step.
pub fn inner_minimize_with<F>(
    dataset: &mut SurrogateDataset,
    x_start: &DVector<f64>,
    params: &InnerParams,
    mut on_accept: F,
) -> Result<InnerOutcome>
where
    F: FnMut(&mut SurrogateDataset, &DVector<f64>) -> Result<()>,
{
    params.validate()?;
    let v = dataset.kernel().inv_lengthscale().clone();
    let mut x = x_start.clone();
    let mut visited = vec![x.clone()];
    let (mut f, mut g, mut h) = dataset.predict_mean(&x)?;
    let mut steps = 0;

    for _ in 0..params.max_steps {
        if g.norm() <= params.grad_tol {
            break;
        }
        let mut p = safeguarded_direction(&h, &g, params.floor_ratio);
        let len = p.dot(&(&v * &p)).sqrt();
        if len > params.max_step {
            p *= params.max_step / len;
        }
        let slope = g.dot(&p);
        if !(slope < 0.0) {
            break;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..params.max_backtracks {
            let trial = &x + &p * alpha;
            let f_trial = dataset.predict_cost(&trial)?;
            if f_trial <= f + params.c1 * alpha * slope {
                accepted = Some(trial);
                break;
            }
            alpha *= params.backtrack;
        }
        let Some(x_new) = accepted else { break };
        if x_new == x {
            break;
        }
        x = x_new;
        steps += 1;
        on_accept(dataset, &x)?;
        visited.push(x.clone());
        (f, g, h) = dataset.predict_mean(&x)?;
    }

    let mut best = (x_start.clone(), f64::INFINITY);
    for p in visited {
        let fp = dataset.predict_cost(&p)?;
        if fp < best.1 {
            best = (p, fp);
        }
    }
    Ok(InnerOutcome {
        x_min: best.0,
        f_min: best.1,
        steps,
    })
}
