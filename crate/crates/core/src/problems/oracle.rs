use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use crate::error::{Error, Result};

/// One noisy measurement of cost and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub cost: f64,
    pub grad: DVector<f64>,
}

impl Evaluation {
    pub fn new(cost: f64, grad: DVector<f64>) -> Self {
        Self { cost, grad }
    }

    /// Fails with an evaluation error when any component is NaN or infinite.
    pub fn checked(self) -> Result<Self> {
        if !self.cost.is_finite() || self.grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Evaluation(format!(
                "non-finite oracle output (cost {})",
                self.cost
            )));
        }
        Ok(self)
    }
}

/// Noise standard deviation on the cost and covariance on the gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseLevels {
    pub cost_sd: f64,
    pub grad_cov: DMatrix<f64>,
}

impl NoiseLevels {
    pub fn zero(n: usize) -> Self {
        Self {
            cost_sd: 0.0,
            grad_cov: DMatrix::zeros(n, n),
        }
    }

    pub fn isotropic(cost_sd: f64, grad_sd: f64, n: usize) -> Self {
        Self {
            cost_sd,
            grad_cov: DMatrix::identity(n, n) * (grad_sd * grad_sd),
        }
    }
}

/// Point in, noisy cost and gradient out.
///
/// All randomness is drawn from the supplied stream, so evaluating the same
/// point with identically seeded streams reproduces the output bit for bit.
pub trait NoisyOracle: Send + Sync {
    fn dim(&self) -> usize;

    fn evaluate(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> Result<Evaluation>;

    /// Noise levels known by construction; `None` when they must be estimated.
    fn declared_noise(&self) -> Option<NoiseLevels>;
}

/// Sample variance of the cost and per-coordinate sample variances of the
/// gradient over `samples` repeated evaluations at `x`.
pub fn estimate_noise(
    oracle: &dyn NoisyOracle,
    x: &DVector<f64>,
    samples: usize,
    rng: &mut dyn RngCore,
) -> Result<NoiseLevels> {
    if samples < 2 {
        return Err(Error::InvalidArgument(
            "noise estimation needs at least two samples".into(),
        ));
    }
    let n = oracle.dim();
    let evals = (0..samples)
        .map(|_| oracle.evaluate(x, rng).and_then(Evaluation::checked))
        .collect::<Result<Vec<_>>>()?;
    let denom = (samples - 1) as f64;
    let mean_f = evals.iter().map(|e| e.cost).sum::<f64>() / samples as f64;
    let var_f = evals.iter().map(|e| (e.cost - mean_f).powi(2)).sum::<f64>() / denom;
    let mut grad_cov = DMatrix::zeros(n, n);
    for i in 0..n {
        let mean_g = evals.iter().map(|e| e.grad[i]).sum::<f64>() / samples as f64;
        grad_cov[(i, i)] = evals
            .iter()
            .map(|e| (e.grad[i] - mean_g).powi(2))
            .sum::<f64>()
            / denom;
    }
    Ok(NoiseLevels {
        cost_sd: var_f.sqrt(),
        grad_cov,
    })
}
