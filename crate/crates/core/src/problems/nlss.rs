//! Nonlinear time-varying benchmark
//! `x_{t+1} = 0.5 x_t + b x_t / (1 + x_t²) + 8 cos(1.2 t) + q w_t`,
//! `y_t = 0.05 x_t² + e_t`, `w ~ N(0, 1)`, `e ~ N(0, 0.1)`, `x_1 ~ N(0, 1)`.

use std::f64::consts::PI;

use nalgebra::{dvector, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::oracle::{Evaluation, NoiseLevels, NoisyOracle};
use super::pf::{loglik_and_score, StateSpaceModel};
use crate::error::{Error, Result};

/// Measurement-noise variance (fixed, not estimated).
pub const NLSS_MEAS_VAR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearSsmParams {
    pub b: f64,
    /// Process-noise standard deviation.
    pub q: f64,
}

impl NonlinearSsmParams {
    pub const TRUTH: NonlinearSsmParams = NonlinearSsmParams {
        b: 25.0,
        q: 0.316_227_766_016_837_94,
    };

    pub fn new(b: f64, q: f64) -> Result<Self> {
        if !b.is_finite() || !(q > 0.0 && q.is_finite()) {
            return Err(Error::Domain(format!(
                "need finite b and q > 0 (b = {b}, q = {q})"
            )));
        }
        Ok(Self { b, q })
    }

    pub fn to_vector(&self) -> DVector<f64> {
        dvector![self.b, self.q]
    }

    pub fn from_vector(v: &DVector<f64>) -> Result<Self> {
        if v.len() != 2 {
            return Err(Error::InvalidArgument(
                "nonlinear model has two parameters".into(),
            ));
        }
        Self::new(v[0], v[1])
    }

    /// Optimisation coordinates `(b, ln q)`.
    pub fn to_transformed(&self) -> DVector<f64> {
        dvector![self.b, self.q.ln()]
    }

    pub fn from_transformed(v: &DVector<f64>) -> Result<Self> {
        if v.len() != 2 {
            return Err(Error::InvalidArgument(
                "nonlinear model has two parameters".into(),
            ));
        }
        if !v[1].is_finite() {
            return Err(Error::Domain("non-finite ln q".into()));
        }
        Self::new(v[0], v[1].exp())
    }

    /// Deterministic part of the transition from `x_t`.
    pub fn transition_mean(&self, x: f64, t: usize) -> f64 {
        0.5 * x + self.b * x / (1.0 + x * x) + 8.0 * (1.2 * t as f64).cos()
    }
}

/// Simulates `(x_1:N, y_1:N)` from a given initial state and measurement
/// variance; `q = 0` and `meas_var = 0` give the noise-free recursion.
pub fn simulate_nlss_path(
    params: &NonlinearSsmParams,
    x1: f64,
    n: usize,
    meas_var: f64,
    rng: &mut dyn RngCore,
) -> (Vec<f64>, Vec<f64>) {
    let sr = meas_var.max(0.0).sqrt();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut x = x1;
    for t in 1..=n {
        let e: f64 = StandardNormal.sample(rng);
        xs.push(x);
        ys.push(0.05 * x * x + sr * e);
        let w: f64 = StandardNormal.sample(rng);
        x = params.transition_mean(x, t) + params.q * w;
    }
    (xs, ys)
}

/// Simulates `y_1:N` with `x_1 ~ N(0, 1)`.
pub fn simulate_nlss(params: &NonlinearSsmParams, n: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    let x1: f64 = StandardNormal.sample(rng);
    simulate_nlss_path(params, x1, n, NLSS_MEAS_VAR, rng).1
}

/// Score of `log N(x_next; mean(x_prev, b), q²)` in `(b, ln q)`.
pub fn transition_score(
    params: &NonlinearSsmParams,
    x_prev: f64,
    x_next: f64,
    t: usize,
) -> [f64; 2] {
    let resid = x_next - params.transition_mean(x_prev, t);
    let q2 = params.q * params.q;
    [
        resid / q2 * x_prev / (1.0 + x_prev * x_prev),
        -1.0 + resid * resid / q2,
    ]
}

/// `log N(x_next; mean(x_prev, b), q²)`.
pub fn transition_log_density(
    params: &NonlinearSsmParams,
    x_prev: f64,
    x_next: f64,
    t: usize,
) -> f64 {
    let resid = x_next - params.transition_mean(x_prev, t);
    -params.q.ln() - 0.5 * (2.0 * PI).ln() - 0.5 * resid * resid / (params.q * params.q)
}

impl StateSpaceModel for NonlinearSsmParams {
    fn sample_initial(&self, rng: &mut dyn RngCore) -> f64 {
        StandardNormal.sample(rng)
    }

    fn sample_transition(&self, x: f64, t: usize, rng: &mut dyn RngCore) -> f64 {
        let w: f64 = StandardNormal.sample(rng);
        self.transition_mean(x, t) + self.q * w
    }

    fn log_observation(&self, x: f64, y: f64, _t: usize) -> f64 {
        let e = y - 0.05 * x * x;
        -0.5 * ((2.0 * PI * NLSS_MEAS_VAR).ln() + e * e / NLSS_MEAS_VAR)
    }

    fn score_dim(&self) -> usize {
        2
    }

    fn transition_score(&self, x_prev: f64, x_next: f64, t: usize, out: &mut [f64]) {
        let s = transition_score(self, x_prev, x_next, t);
        out[0] += s[0];
        out[1] += s[1];
    }
}

/// Negative log-likelihood oracle over `(b, ln q)`: the particle-filter
/// estimate and the negated Fisher-identity score from the same filter run.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearOracle {
    y: Vec<f64>,
    particles: usize,
}

pub fn nonlinear_oracle(y: Vec<f64>, particles: usize) -> Result<NonlinearOracle> {
    if y.is_empty() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "data must be non-empty and finite".into(),
        ));
    }
    if particles < 2 {
        return Err(Error::InvalidArgument("need at least two particles".into()));
    }
    Ok(NonlinearOracle { y, particles })
}

impl NonlinearOracle {
    pub fn data(&self) -> &[f64] {
        &self.y
    }
}

impl NoisyOracle for NonlinearOracle {
    fn dim(&self) -> usize {
        2
    }

    fn evaluate(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> Result<Evaluation> {
        let params = NonlinearSsmParams::from_transformed(x)?;
        // Fresh stream per call, derived from the caller's stream.
        let mut pf_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
        let (ll, score) = loglik_and_score(&params, &self.y, self.particles, &mut pf_rng)?;
        Ok(Evaluation::new(-ll, -score))
    }

    fn declared_noise(&self) -> Option<NoiseLevels> {
        None
    }
}
