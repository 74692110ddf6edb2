//! The surrogate optimisation loop.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use super::dataset::{SurrogateDataset, DEFAULT_CAPACITY};
use super::inner::{inner_minimize_with, InnerParams};
use crate::error::{Error, Result};
use crate::gp_core::SeKernelParams;
use crate::problems::{estimate_noise, NoisyOracle};
use crate::trace::{IterStatus, IterateRecord, OptimizationTrace, Termination};

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateParams {
    pub kernel: SeKernelParams,
    /// Stop once the surrogate gradient norm drops below this.
    pub epsilon: f64,
    /// Outer iterations (inner searches).
    pub k_max: usize,
    pub capacity: usize,
    /// Oracle calls at `x0` used to estimate the noise levels.
    pub noise_samples: usize,
    /// Lower bound on the noise variances relative to the prior variance of
    /// the matching quantity (`σ²` for the cost, `σ² Vᵢᵢ` for gradients).
    pub noise_floor: f64,
    pub inner: InnerParams,
    /// Cap on observations added to the dataset. Once reached, the current
    /// inner search finishes on the frozen surrogate and the run stops.
    pub max_observations: Option<usize>,
}

impl SurrogateParams {
    pub fn new(kernel: SeKernelParams) -> Self {
        Self {
            kernel,
            epsilon: 1e-6,
            k_max: 100,
            capacity: DEFAULT_CAPACITY,
            noise_samples: 10,
            noise_floor: 1e-10,
            inner: InnerParams::default(),
            max_observations: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.inner.validate()?;
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if self.noise_samples < 2 {
            return Err(Error::InvalidArgument(
                "noise estimation needs at least two samples".into(),
            ));
        }
        if !(self.noise_floor >= 0.0) {
            return Err(Error::InvalidArgument(
                "noise_floor must be non-negative".into(),
            ));
        }
        if self.max_observations == Some(0) {
            return Err(Error::InvalidArgument(
                "max_observations must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Runs the surrogate optimiser from `x0`.
///
/// Trace records hold the surrogate mean and surrogate gradient norm at each
/// outer iterate. Errors end the run with [`Termination::Failed`] and the
/// trace so far.
pub fn optimize_alg2(
    oracle: &dyn NoisyOracle,
    x0: &DVector<f64>,
    params: &SurrogateParams,
    rng: &mut dyn RngCore,
) -> OptimizationTrace {
    let mut trace = OptimizationTrace::new(header(params));
    if let Err(e) = run(oracle, x0, params, rng, &mut trace) {
        trace.termination = Termination::Failed(e);
    }
    trace
}

fn header(params: &SurrogateParams) -> Vec<(String, String)> {
    let v = params
        .kernel
        .inv_lengthscale()
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    vec![
        ("optimizer".into(), "alg2_surrogate_gp".into()),
        ("sigma_sq".into(), params.kernel.sigma_sq().to_string()),
        ("v".into(), v),
        ("epsilon".into(), params.epsilon.to_string()),
        ("k_max".into(), params.k_max.to_string()),
        ("capacity".into(), params.capacity.to_string()),
    ]
}

fn run(
    oracle: &dyn NoisyOracle,
    x0: &DVector<f64>,
    params: &SurrogateParams,
    rng: &mut dyn RngCore,
    trace: &mut OptimizationTrace,
) -> Result<()> {
    params.validate()?;
    let n = params.kernel.dim();
    if x0.len() != n || oracle.dim() != n || x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "initial point must be finite and match the oracle and kernel dimension".into(),
        ));
    }

    let noise = estimate_noise(oracle, x0, params.noise_samples, rng)?;
    trace.evaluations += params.noise_samples;
    let sigma_sq = params.kernel.sigma_sq();
    let v = params.kernel.inv_lengthscale();
    let cost_var = (noise.cost_sd * noise.cost_sd).max(params.noise_floor * sigma_sq);
    let grad_cov = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            noise.grad_cov[(i, i)].max(params.noise_floor * sigma_sq * v[(i, i)])
        } else {
            0.0
        }
    });
    trace.header.push(("cost_var".into(), cost_var.to_string()));
    trace.header.push((
        "grad_var".into(),
        grad_cov
            .diagonal()
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    ));
    let mut ds = SurrogateDataset::new(params.kernel.clone(), cost_var, grad_cov, params.capacity)?;

    let budget = params.max_observations.unwrap_or(usize::MAX);
    let observed = Cell::new(0usize);
    let evaluations = Cell::new(0usize);
    // Adds an oracle observation at `x` unless the budget is spent or the
    // point is already in the data.
    let observe =
        |ds: &mut SurrogateDataset, x: &DVector<f64>, rng: &mut dyn RngCore| -> Result<()> {
            if observed.get() >= budget || ds.find_duplicate(x).is_some() {
                return Ok(());
            }
            let eval = oracle.evaluate(x, rng)?.checked()?;
            evaluations.set(evaluations.get() + 1);
            ds.add_observation(x, eval.cost, &eval.grad)?;
            observed.set(observed.get() + 1);
            Ok(())
        };

    let mut x = x0.clone();
    let mut step = 0.0;
    let mut k = 0;
    let result = loop {
        let had_budget = observed.get() < budget;
        if let Err(e) = observe(&mut ds, &x, rng) {
            break Err(e);
        }
        let pred = match ds.predict_mean(&x) {
            Ok(p) => p,
            Err(e) => break Err(e),
        };
        trace.push(IterateRecord {
            iteration: k,
            x: x.clone(),
            cost: pred.0,
            grad_norm: pred.1.norm(),
            step,
            status: if k == 0 {
                IterStatus::Start
            } else {
                IterStatus::Accepted
            },
            hessian_vech: None,
        });
        if pred.1.norm() < params.epsilon {
            trace.termination = Termination::Converged;
            break Ok(());
        }
        if k == params.k_max || !had_budget {
            trace.termination = Termination::MaxIterations;
            break Ok(());
        }
        let inner = inner_minimize_with(&mut ds, &x, &params.inner, |ds, xi| observe(ds, xi, rng));
        let next = match inner {
            Ok(o) => o.x_min,
            Err(e) => break Err(e),
        };
        step = (&next - &x).norm();
        x = next;
        k += 1;
    };
    trace.evaluations += evaluations.get();
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::FunctionOracle;
    use nalgebra::dvector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn k_max_one_gives_single_outer_step() {
        let oracle = FunctionOracle::quadratic(DMatrix::identity(2, 2) * 2.0, dvector![1.0, -1.0]);
        let kernel = SeKernelParams::isotropic(100.0, 0.1, 2).unwrap();
        let mut params = SurrogateParams::new(kernel);
        params.k_max = 1;
        params.epsilon = 1e-300;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trace = optimize_alg2(&oracle, &dvector![2.0, 2.0], &params, &mut rng);
        assert_eq!(trace.termination.as_str(), "max_iter");
        assert_eq!(trace.records.len(), 2);
    }
}
