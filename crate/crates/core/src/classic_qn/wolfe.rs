//! Strong-Wolfe line search (bracketing followed by cubic-interpolation zoom).

use nalgebra::DVector;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::problems::{Evaluation, NoisyOracle};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WolfeParams {
    pub c1: f64,
    pub c2: f64,
    /// Oracle evaluations allowed per search.
    pub max_evals: usize,
    pub alpha_max: f64,
}

impl Default for WolfeParams {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.9,
            max_evals: 30,
            alpha_max: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WolfeOutcome {
    pub alpha: f64,
    pub x: DVector<f64>,
    pub eval: Evaluation,
    pub evals: usize,
}

struct Probe {
    alpha: f64,
    phi: f64,
    dphi: f64,
    x: DVector<f64>,
    eval: Evaluation,
}

struct LineFn<'a> {
    oracle: &'a dyn NoisyOracle,
    x: &'a DVector<f64>,
    p: &'a DVector<f64>,
    rng: &'a mut dyn RngCore,
    evals: usize,
    max_evals: usize,
}

impl LineFn<'_> {
    fn probe(&mut self, alpha: f64) -> Result<Probe> {
        if self.evals >= self.max_evals {
            return Err(Error::LineSearch { trials: self.evals });
        }
        self.evals += 1;
        let x = self.x + self.p * alpha;
        let eval = match self.oracle.evaluate(&x, self.rng) {
            Ok(e) => e.checked()?,
            // A point the oracle cannot evaluate acts as an infinite cost,
            // which sends the search back towards smaller steps.
            Err(Error::Domain(_) | Error::Degeneracy { .. } | Error::Numerical(_)) => {
                Evaluation::new(f64::INFINITY, DVector::from_element(self.p.len(), f64::NAN))
            }
            Err(e) => return Err(e),
        };
        Ok(Probe {
            alpha,
            phi: eval.cost,
            dphi: eval.grad.dot(self.p),
            x,
            eval,
        })
    }
}

/// Minimiser of the cubic matching values and slopes at `a` and `b`,
/// or `None` when it does not exist.
fn cubic_min(a: &Probe, b: &Probe) -> Option<f64> {
    let d1 = a.dphi + b.dphi - 3.0 * (a.phi - b.phi) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.dphi * b.dphi;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let denom = b.dphi - a.dphi + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let t = b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / denom;
    t.is_finite().then_some(t)
}

#[allow(clippy::too_many_arguments)]
/// Finds `α` with `φ(α) ≤ φ(0) + c₁ α φ'(0)` and `|φ'(α)| ≤ c₂ |φ'(0)|`.
///
/// Fails with [`Error::LineSearch`] when the evaluation budget runs out,
/// which happens routinely on noisy oracles.
pub fn strong_wolfe_search(
    oracle: &dyn NoisyOracle,
    x: &DVector<f64>,
    p: &DVector<f64>,
    f_x: f64,
    g_x: &DVector<f64>,
    alpha_init: f64,
    params: &WolfeParams,
    rng: &mut dyn RngCore,
) -> Result<WolfeOutcome> {
    let dphi0 = g_x.dot(p);
    if !(dphi0 < 0.0) {
        return Err(Error::InvalidArgument(
            "search direction is not a descent direction".into(),
        ));
    }
    let mut line = LineFn {
        oracle,
        x,
        p,
        rng,
        evals: 0,
        max_evals: params.max_evals,
    };
    let start = Probe {
        alpha: 0.0,
        phi: f_x,
        dphi: dphi0,
        x: x.clone(),
        eval: Evaluation::new(f_x, g_x.clone()),
    };
    let armijo = |pr: &Probe| pr.phi <= f_x + params.c1 * pr.alpha * dphi0;
    let curvature = |pr: &Probe| pr.dphi.abs() <= -params.c2 * dphi0;

    let mut prev = start;
    let mut alpha = alpha_init.min(params.alpha_max);
    let mut first = true;
    let found = loop {
        let cur = line.probe(alpha)?;
        if !armijo(&cur) || (!first && cur.phi >= prev.phi) {
            break zoom(&mut line, prev, cur, f_x, dphi0, params)?;
        }
        if curvature(&cur) {
            break cur;
        }
        if cur.dphi >= 0.0 {
            break zoom(&mut line, cur, prev, f_x, dphi0, params)?;
        }
        first = false;
        alpha = (2.0 * cur.alpha).min(params.alpha_max);
        if cur.alpha >= params.alpha_max {
            return Err(Error::LineSearch { trials: line.evals });
        }
        prev = cur;
    };
    Ok(WolfeOutcome {
        alpha: found.alpha,
        x: found.x,
        eval: found.eval,
        evals: line.evals,
    })
}

fn zoom(
    line: &mut LineFn<'_>,
    mut lo: Probe,
    mut hi: Probe,
    f_x: f64,
    dphi0: f64,
    params: &WolfeParams,
) -> Result<Probe> {
    loop {
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        let width = b - a;
        if !(width > 1e-14 * b.max(1.0)) {
            return Err(Error::LineSearch { trials: line.evals });
        }
        let mut alpha = cubic_min(&lo, &hi).unwrap_or(0.5 * (a + b));
        if !(alpha > a + 0.1 * width && alpha < b - 0.1 * width) {
            alpha = 0.5 * (a + b);
        }
        let cur = line.probe(alpha)?;
        if cur.phi > f_x + params.c1 * cur.alpha * dphi0 || cur.phi >= lo.phi {
            hi = cur;
        } else {
            if cur.dphi.abs() <= -params.c2 * dphi0 {
                return Ok(cur);
            }
            if cur.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
}
