//! The scalar quadratic `f(x) = 2.5 (x - 5)²` and a generic function oracle.

use nalgebra::{dvector, DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::oracle::{Evaluation, NoiseLevels, NoisyOracle};
use crate::error::{Error, Result};

/// `f(x) = 2.5 (x - 5)²` observed with additive Gaussian noise on the cost
/// (standard deviation `sigma_c`) and gradient (`sigma_g`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticOracle {
    pub sigma_c: f64,
    pub sigma_g: f64,
}

pub const QUADRATIC_MINIMIZER: f64 = 5.0;

pub fn quadratic_oracle(sigma_c: f64, sigma_g: f64) -> QuadraticOracle {
    QuadraticOracle { sigma_c, sigma_g }
}

impl QuadraticOracle {
    pub fn value(x: f64) -> f64 {
        2.5 * (x - QUADRATIC_MINIMIZER).powi(2)
    }

    pub fn derivative(x: f64) -> f64 {
        5.0 * (x - QUADRATIC_MINIMIZER)
    }
}

impl NoisyOracle for QuadraticOracle {
    fn dim(&self) -> usize {
        1
    }

    fn evaluate(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> Result<Evaluation> {
        if x.len() != 1 {
            return Err(Error::InvalidArgument(
                "quadratic oracle is one-dimensional".into(),
            ));
        }
        let vc: f64 = StandardNormal.sample(rng);
        let vg: f64 = StandardNormal.sample(rng);
        Ok(Evaluation::new(
            Self::value(x[0]) + self.sigma_c * vc,
            dvector![Self::derivative(x[0]) + self.sigma_g * vg],
        ))
    }

    fn declared_noise(&self) -> Option<NoiseLevels> {
        Some(NoiseLevels::isotropic(self.sigma_c, self.sigma_g, 1))
    }
}

type CostGrad = dyn Fn(&DVector<f64>) -> (f64, DVector<f64>) + Send + Sync;

/// Wraps a closure returning `(f(x), ∇f(x))`, with optional isotropic
/// Gaussian noise.
pub struct FunctionOracle {
    dim: usize,
    f: Box<CostGrad>,
    cost_sd: f64,
    grad_sd: f64,
}

impl FunctionOracle {
    pub fn new(
        dim: usize,
        f: impl Fn(&DVector<f64>) -> (f64, DVector<f64>) + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            f: Box::new(f),
            cost_sd: 0.0,
            grad_sd: 0.0,
        }
    }

    pub fn with_noise(mut self, cost_sd: f64, grad_sd: f64) -> Self {
        self.cost_sd = cost_sd;
        self.grad_sd = grad_sd;
        self
    }

    /// `½ xᵀ A x - bᵀ x`.
    pub fn quadratic(a: DMatrix<f64>, b: DVector<f64>) -> Self {
        let dim = b.len();
        Self::new(dim, move |x| {
            let ax = &a * x;
            (0.5 * x.dot(&ax) - b.dot(x), ax - &b)
        })
    }

    /// Two-dimensional Rosenbrock function `(1 - x)² + 100 (y - x²)²`.
    pub fn rosenbrock() -> Self {
        Self::new(2, |v| {
            let (x, y) = (v[0], v[1]);
            let f = (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2);
            let g = dvector![
                -2.0 * (1.0 - x) - 400.0 * x * (y - x * x),
                200.0 * (y - x * x)
            ];
            (f, g)
        })
    }
}

impl NoisyOracle for FunctionOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> Result<Evaluation> {
        if x.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "oracle expects dimension {}, got {}",
                self.dim,
                x.len()
            )));
        }
        let (mut f, mut g) = (self.f)(x);
        if self.cost_sd > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            f += self.cost_sd * z;
        }
        if self.grad_sd > 0.0 {
            for gi in g.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *gi += self.grad_sd * z;
            }
        }
        Ok(Evaluation::new(f, g))
    }

    fn declared_noise(&self) -> Option<NoiseLevels> {
        Some(NoiseLevels::isotropic(self.cost_sd, self.grad_sd, self.dim))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noise_free_values() {
        let o = quadratic_oracle(0.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let at_min = o.evaluate(&dvector![5.0], &mut rng).unwrap();
        assert_eq!((at_min.cost, at_min.grad[0]), (0.0, 0.0));
        let e = o.evaluate(&dvector![-10.0], &mut rng).unwrap();
        assert_eq!((e.cost, e.grad[0]), (562.5, -75.0));
    }

    #[test]
    fn cost_noise_variance_matches_declaration() {
        let o = quadratic_oracle(20.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = dvector![2.0];
        let draws: Vec<f64> = (0..10_000)
            .map(|_| o.evaluate(&x, &mut rng).unwrap().cost)
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        // Var of the sample variance for Gaussian data: 2σ⁴/(N-1); 3σ band.
        let band = 3.0 * (2.0 * 400.0f64.powi(2) / 9_999.0).sqrt();
        assert!((var - 400.0).abs() < band, "variance {var}");
        assert!((350.0..=450.0).contains(&var));
    }
}
