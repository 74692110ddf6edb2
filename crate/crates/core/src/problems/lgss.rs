//! Scalar linear Gaussian state-space model
//! `x_{t+1} = a x_t + w_t`, `y_t = c x_t + e_t`, `w ~ N(0, q)`, `e ~ N(0, r)`,
//! with `x_1 ~ N(0, 1)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::oracle::{Evaluation, NoiseLevels, NoisyOracle};
use super::pf::StateSpaceModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSsmParams {
    pub a: f64,
    pub c: f64,
    /// Process-noise variance.
    pub q: f64,
    /// Measurement-noise variance.
    pub r: f64,
}

impl LinearSsmParams {
    pub const TRUTH: LinearSsmParams = LinearSsmParams {
        a: 0.9,
        c: 1.0,
        q: 0.1,
        r: 0.5,
    };

    pub fn new(a: f64, c: f64, q: f64, r: f64) -> Result<Self> {
        let p = Self { a, c, q, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.c.is_finite()) {
            return Err(Error::Domain("a and c must be finite".into()));
        }
        if !(self.q > 0.0 && self.q.is_finite() && self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::Domain(format!(
                "variances must be positive and finite (q = {}, r = {})",
                self.q, self.r
            )));
        }
        Ok(())
    }

    /// Natural parameters `(a, c, q, r)`.
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&[self.a, self.c, self.q, self.r])
    }

    pub fn from_vector(v: &DVector<f64>) -> Result<Self> {
        if v.len() != 4 {
            return Err(Error::InvalidArgument(
                "linear model has four parameters".into(),
            ));
        }
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// Optimisation coordinates `(a, c, ln q, ln r)`.
    pub fn to_transformed(&self) -> DVector<f64> {
        DVector::from_column_slice(&[self.a, self.c, self.q.ln(), self.r.ln()])
    }

    pub fn from_transformed(v: &DVector<f64>) -> Result<Self> {
        if v.len() != 4 {
            return Err(Error::InvalidArgument(
                "linear model has four parameters".into(),
            ));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite linear-model parameter".into()));
        }
        Self::new(v[0], v[1], v[2].exp(), v[3].exp())
    }
}

/// Simulates `y_1:N` with `x_1 ~ N(0, 1)`.
pub fn simulate_lgss(params: &LinearSsmParams, n: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    let x1: f64 = StandardNormal.sample(rng);
    simulate_lgss_from(params, x1, n, rng)
}

/// Simulates `y_1:N` from a given initial state. Variances may be zero here.
pub fn simulate_lgss_from(
    params: &LinearSsmParams,
    x1: f64,
    n: usize,
    rng: &mut dyn RngCore,
) -> Vec<f64> {
    let (sq, sr) = (params.q.max(0.0).sqrt(), params.r.max(0.0).sqrt());
    let mut x = x1;
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let e: f64 = StandardNormal.sample(rng);
        ys.push(params.c * x + sr * e);
        let w: f64 = StandardNormal.sample(rng);
        x = params.a * x + sq * w;
    }
    ys
}

/// Exact log-likelihood and its gradient with respect to `(a, c, q, r)`,
/// from the Kalman filter and its sensitivity recursions.
pub fn kalman_loglik_grad(params: &LinearSsmParams, y: &[f64]) -> Result<(f64, [f64; 4])> {
    params.validate()?;
    let LinearSsmParams { a, c, q, r } = *params;
    // Predicted mean/variance and their derivatives w.r.t. (a, c, q, r).
    let mut m = 0.0;
    let mut p = 1.0;
    let mut dm = [0.0; 4];
    let mut dp = [0.0; 4];
    let mut ll = 0.0;
    let mut dll = [0.0; 4];
    for (t, &yt) in y.iter().enumerate() {
        let s = c * c * p + r;
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Numerical(format!(
                "non-positive innovation variance {s} at t = {}",
                t + 1
            )));
        }
        let e = yt - c * m;
        ll -= 0.5 * ((2.0 * PI * s).ln() + e * e / s);
        let k = c * p / s;
        let mf = m + k * e;
        let pf = p * (1.0 - k * c);
        let mut dm_next = [0.0; 4];
        let mut dp_next = [0.0; 4];
        for j in 0..4 {
            let (da, dc, dq, dr) = unit(j);
            let ds = 2.0 * c * dc * p + c * c * dp[j] + dr;
            let de = -dc * m - c * dm[j];
            dll[j] -= 0.5 * (ds / s + 2.0 * e * de / s - e * e * ds / (s * s));
            let dk = (dc * p + c * dp[j]) / s - c * p * ds / (s * s);
            let dmf = dm[j] + dk * e + k * de;
            let dpf = dp[j] * (1.0 - k * c) - p * (dk * c + k * dc);
            dm_next[j] = da * mf + a * dmf;
            dp_next[j] = 2.0 * a * da * pf + a * a * dpf + dq;
        }
        m = a * mf;
        p = a * a * pf + q;
        dm = dm_next;
        dp = dp_next;
    }
    if !ll.is_finite() || dll.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("Kalman recursion overflowed".into()));
    }
    Ok((ll, dll))
}

fn unit(j: usize) -> (f64, f64, f64, f64) {
    match j {
        0 => (1.0, 0.0, 0.0, 0.0),
        1 => (0.0, 1.0, 0.0, 0.0),
        2 => (0.0, 0.0, 1.0, 0.0),
        _ => (0.0, 0.0, 0.0, 1.0),
    }
}

/// Gradient of the log-likelihood in `(a, c, ln q, ln r)`.
pub fn kalman_loglik_grad_transformed(
    params: &LinearSsmParams,
    y: &[f64],
) -> Result<(f64, DVector<f64>)> {
    let (ll, g) = kalman_loglik_grad(params, y)?;
    Ok((
        ll,
        DVector::from_column_slice(&[g[0], g[1], g[2] * params.q, g[3] * params.r]),
    ))
}

/// Negative log-likelihood oracle over `(a, c, ln q, ln r)` with additive
/// Gaussian noise on the cost and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LgssOracle {
    y: Vec<f64>,
    cost_sd: f64,
    grad_sd: f64,
}

/// Noise standard deviations used for the noisy linear experiment:
/// `v_c ~ N(0, 10⁴)`, `v_g ~ N(0, 25 I)`.
pub const LGSS_COST_NOISE_SD: f64 = 100.0;
pub const LGSS_GRAD_NOISE_SD: f64 = 5.0;

pub fn noisy_lgss_oracle(y: Vec<f64>, cost_sd: f64, grad_sd: f64) -> Result<LgssOracle> {
    if y.is_empty() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "data must be non-empty and finite".into(),
        ));
    }
    if !(cost_sd >= 0.0 && grad_sd >= 0.0) {
        return Err(Error::InvalidArgument(
            "noise levels must be non-negative".into(),
        ));
    }
    Ok(LgssOracle {
        y,
        cost_sd,
        grad_sd,
    })
}

impl LgssOracle {
    pub fn data(&self) -> &[f64] {
        &self.y
    }
}

impl NoisyOracle for LgssOracle {
    fn dim(&self) -> usize {
        4
    }

    fn evaluate(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> Result<Evaluation> {
        let params = LinearSsmParams::from_transformed(x)?;
        let (ll, g) = kalman_loglik_grad_transformed(&params, &self.y)?;
        let mut cost = -ll;
        let mut grad = -g;
        if self.cost_sd > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            cost += self.cost_sd * z;
        }
        if self.grad_sd > 0.0 {
            for gi in grad.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *gi += self.grad_sd * z;
            }
        }
        Ok(Evaluation::new(cost, grad))
    }

    fn declared_noise(&self) -> Option<NoiseLevels> {
        Some(NoiseLevels {
            cost_sd: self.cost_sd,
            grad_cov: DMatrix::identity(4, 4) * self.grad_sd.powi(2),
        })
    }
}

/// The linear model as a particle-filter target, with score in
/// `(a, c, ln q, ln r)`.
impl StateSpaceModel for LinearSsmParams {
    fn sample_initial(&self, rng: &mut dyn RngCore) -> f64 {
        StandardNormal.sample(rng)
    }

    fn sample_transition(&self, x: f64, _t: usize, rng: &mut dyn RngCore) -> f64 {
        let w: f64 = StandardNormal.sample(rng);
        self.a * x + self.q.sqrt() * w
    }

    fn log_observation(&self, x: f64, y: f64, _t: usize) -> f64 {
        let e = y - self.c * x;
        -0.5 * ((2.0 * PI * self.r).ln() + e * e / self.r)
    }

    fn score_dim(&self) -> usize {
        4
    }

    fn transition_score(&self, x_prev: f64, x_next: f64, _t: usize, out: &mut [f64]) {
        let w = x_next - self.a * x_prev;
        out[0] += w * x_prev / self.q;
        out[2] += -0.5 + 0.5 * w * w / self.q;
    }

    fn observation_score(&self, x: f64, y: f64, _t: usize, out: &mut [f64]) {
        let e = y - self.c * x;
        out[1] += e * x / self.r;
        out[3] += -0.5 + 0.5 * e * e / self.r;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noise_free_recursion() {
        let p = LinearSsmParams {
            a: 0.9,
            c: 1.0,
            q: 0.0,
            r: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y = simulate_lgss_from(&p, 1.0, 12, &mut rng);
        for (t, yt) in y.iter().enumerate() {
            assert!((yt - 0.9f64.powi(t as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn single_step_marginal() {
        let p = LinearSsmParams::TRUTH;
        let (ll, _) = kalman_loglik_grad(&p, &[0.0]).unwrap();
        let expected = -0.5 * (2.0 * PI * 1.5).ln();
        assert!((ll - expected).abs() < 1e-14);
        assert!((ll + 1.121671).abs() < 1e-6);
    }

    #[test]
    fn sign_of_c_irrelevant_when_a_zero() {
        let y = [0.3, -1.2, 0.8, 2.0];
        let p = LinearSsmParams::new(0.0, 0.7, 0.2, 0.4).unwrap();
        let m = LinearSsmParams { c: -0.7, ..p };
        let (l1, _) = kalman_loglik_grad(&p, &y).unwrap();
        let (l2, _) = kalman_loglik_grad(&m, &y).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_variances() {
        assert!(matches!(
            LinearSsmParams::new(0.9, 1.0, 0.0, 0.5),
            Err(Error::Domain(_))
        ));
        let o = noisy_lgss_oracle(vec![0.1, 0.2], 0.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = DVector::from_column_slice(&[0.9, 1.0, f64::NAN, 0.0]);
        assert!(matches!(o.evaluate(&bad, &mut rng), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_noise_oracle_matches_kalman() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = simulate_lgss(&LinearSsmParams::TRUTH, 40, &mut rng);
        let o = noisy_lgss_oracle(y.clone(), 0.0, 0.0).unwrap();
        let p = LinearSsmParams::new(0.7, 1.2, 0.3, 0.2).unwrap();
        let e = o.evaluate(&p.to_transformed(), &mut rng).unwrap();
        let (ll, g) = kalman_loglik_grad_transformed(&p, &y).unwrap();
        assert_eq!(e.cost, -ll);
        assert_eq!(e.grad, -g);
    }
}
