//! Seeded Monte-Carlo runs over one problem and one optimiser.

use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, InitPolicy, OptimizerKind, ProblemKind};
use super::seed::{derive_seed, DATA_TAG};
use crate::classic_qn::{optimize_bfgs, BfgsParams};
use crate::error::{Error, Result};
use crate::gp_core::{SeKernelParams, VechIndex};
use crate::hessian_gp::{optimize_alg1, EarlyStop, HessianBelief, OptimizerParams};
use crate::problems::{
    noisy_lgss_oracle, nonlinear_oracle, quadratic_oracle, simulate_lgss, simulate_nlss,
    LinearSsmParams, NoisyOracle, NonlinearSsmParams, QUADRATIC_MINIMIZER,
};
use crate::surrogate_gp::{optimize_alg2, SurrogateParams};
use crate::trace::{OptimizationTrace, Termination};

/// Window of the optional Algorithm 1 early stop.
const EARLY_STOP_WINDOW: usize = 5;

/// True parameter vector in natural coordinates.
pub fn truth(problem: ProblemKind) -> DVector<f64> {
    match problem {
        ProblemKind::Quadratic => DVector::from_element(1, QUADRATIC_MINIMIZER),
        ProblemKind::LinearSsm => LinearSsmParams::TRUTH.to_vector(),
        ProblemKind::NonlinearSsm => NonlinearSsmParams::TRUTH.to_vector(),
    }
}

/// Optimiser coordinates to natural parameters.
pub fn to_natural(problem: ProblemKind, x: &DVector<f64>) -> Result<DVector<f64>> {
    match problem {
        ProblemKind::Quadratic => Ok(x.clone()),
        ProblemKind::LinearSsm => Ok(LinearSsmParams::from_transformed(x)?.to_vector()),
        ProblemKind::NonlinearSsm => Ok(NonlinearSsmParams::from_transformed(x)?.to_vector()),
    }
}

/// Natural parameters to optimiser coordinates.
pub fn to_coordinates(problem: ProblemKind, theta: &DVector<f64>) -> Result<DVector<f64>> {
    match problem {
        ProblemKind::Quadratic => Ok(theta.clone()),
        ProblemKind::LinearSsm => Ok(LinearSsmParams::from_vector(theta)?.to_transformed()),
        ProblemKind::NonlinearSsm => Ok(NonlinearSsmParams::from_vector(theta)?.to_transformed()),
    }
}

/// `max_i |θ̂ᵢ − θ*ᵢ| / |θ*ᵢ|`.
pub fn max_relative_error(estimate: &DVector<f64>, truth: &DVector<f64>) -> f64 {
    estimate
        .iter()
        .zip(truth.iter())
        .map(|(e, t)| ((e - t) / t).abs())
        .fold(0.0, |acc, v| {
            if v.is_nan() || acc.is_nan() {
                f64::NAN
            } else {
                acc.max(v)
            }
        })
}

/// The problem a run sees: the same for every optimiser at a given run index.
pub struct RunProblem {
    pub oracle: Box<dyn NoisyOracle>,
    /// Starting point in optimiser coordinates.
    pub x0: DVector<f64>,
    /// Simulated measurements, for the state-space problems.
    pub data: Option<Vec<f64>>,
}

pub fn build_problem(config: &ExperimentConfig, run: usize) -> Result<RunProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.master_seed, run as u64, DATA_TAG));
    let n = config.data_length;
    let (oracle, data): (Box<dyn NoisyOracle>, Option<Vec<f64>>) = match config.problem {
        ProblemKind::Quadratic => (
            Box::new(quadratic_oracle(config.cost_noise(), config.grad_noise())),
            None,
        ),
        ProblemKind::LinearSsm => {
            let y = simulate_lgss(&LinearSsmParams::TRUTH, n, &mut rng);
            let oracle = noisy_lgss_oracle(y.clone(), config.cost_noise(), config.grad_noise())?;
            (Box::new(oracle), Some(y))
        }
        ProblemKind::NonlinearSsm => {
            let y = simulate_nlss(&NonlinearSsmParams::TRUTH, n, &mut rng);
            (
                Box::new(nonlinear_oracle(y.clone(), config.particles)?),
                Some(y),
            )
        }
    };
    let theta_star = truth(config.problem);
    let theta0 = match (&config.initial, config.init) {
        (Some(x), _) => DVector::from_column_slice(x),
        (None, InitPolicy::Tenth) => &theta_star / 10.0,
        (None, InitPolicy::Uniform50) => {
            theta_star.map(|t| t * (1.0 + rng.random_range(-0.5..=0.5)))
        }
    };
    let x0 = to_coordinates(config.problem, &theta0)?;
    Ok(RunProblem { oracle, x0, data })
}

/// How one run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Finished(Termination),
    /// The problem could not be built (e.g. invalid initial point).
    SetupFailed(Error),
    Panicked(String),
}

impl RunStatus {
    /// Text written to the `status` column.
    pub fn label(&self) -> String {
        match self {
            RunStatus::Finished(Termination::Failed(e)) => format!("error: {e}"),
            RunStatus::Finished(t) => t.as_str().to_string(),
            RunStatus::SetupFailed(e) => format!("setup_error: {e}"),
            RunStatus::Panicked(msg) => format!("panic: {msg}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_id: usize,
    pub optimizer: OptimizerKind,
    pub trace: Option<OptimizationTrace>,
    /// Final parameters in natural coordinates.
    pub final_params: Option<DVector<f64>>,
    pub rel_err: f64,
    pub status: RunStatus,
    pub data: Option<Vec<f64>>,
}

impl RunOutcome {
    /// Passes the screen: finite error at or below `threshold`.
    pub fn converged(&self, threshold: f64) -> bool {
        self.rel_err <= threshold
    }
}

/// Runs `optimizer` from `x0` with hyperparameters from `config`.
pub fn run_optimizer(
    config: &ExperimentConfig,
    optimizer: OptimizerKind,
    oracle: &dyn NoisyOracle,
    x0: &DVector<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<OptimizationTrace> {
    let n = config.problem.dim();
    match optimizer {
        OptimizerKind::ClassicBfgs => {
            let params = BfgsParams {
                max_iters: config.k_max,
                grad_tol: config.epsilon,
                ..BfgsParams::default()
            };
            Ok(optimize_bfgs(oracle, x0, &params, rng))
        }
        OptimizerKind::Alg1HessianGp => {
            let m = VechIndex::new(n).len();
            let kernel = SeKernelParams::isotropic(config.alg1_sigma_sq, config.alg1_v, n)?;
            let belief = HessianBelief::from_matrices(
                &(DMatrix::identity(n, n) * config.alg1_b1),
                DMatrix::identity(m, m) * config.alg1_c1,
                kernel,
            )?;
            let params = OptimizerParams {
                max_iters: config.k_max,
                early_stop: config.alg1_early_stop.map(|threshold| EarlyStop {
                    window: EARLY_STOP_WINDOW,
                    threshold,
                }),
                ..OptimizerParams::default()
            };
            Ok(optimize_alg1(oracle, x0, &belief, &params, rng))
        }
        OptimizerKind::Alg2SurrogateGp => {
            let sigma = config.surrogate_sigma();
            let kernel = SeKernelParams::diagonal(sigma * sigma, &config.surrogate_v())?;
            let mut params = SurrogateParams::new(kernel);
            params.epsilon = config.epsilon;
            params.k_max = config.k_max;
            params.capacity = config.alg2_capacity;
            params.max_observations = config.alg2_max_observations;
            Ok(optimize_alg2(oracle, x0, &params, rng))
        }
    }
}

/// One complete run; never panics.
pub fn run_single(config: &ExperimentConfig, optimizer: OptimizerKind, run: usize) -> RunOutcome {
    let failed = |status: RunStatus| RunOutcome {
        run_id: run,
        optimizer,
        trace: None,
        final_params: None,
        rel_err: f64::NAN,
        status,
        data: None,
    };
    let body = || -> Result<RunOutcome> {
        let problem = build_problem(config, run)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            config.master_seed,
            run as u64,
            optimizer.as_str(),
        ));
        let trace = run_optimizer(
            config,
            optimizer,
            problem.oracle.as_ref(),
            &problem.x0,
            &mut rng,
        )?;
        let final_params = trace
            .final_x()
            .and_then(|x| to_natural(config.problem, x).ok());
        let rel_err = final_params
            .as_ref()
            .map_or(f64::NAN, |p| max_relative_error(p, &truth(config.problem)));
        Ok(RunOutcome {
            run_id: run,
            optimizer,
            status: RunStatus::Finished(trace.termination.clone()),
            trace: Some(trace),
            final_params,
            rel_err,
            data: problem.data,
        })
    };
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(outcome)) => outcome,
        Ok(Err(e)) => failed(RunStatus::SetupFailed(e)),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            failed(RunStatus::Panicked(msg))
        }
    }
}

/// All runs of `config`, in run order. Runs execute in parallel; results do
/// not depend on the thread count.
pub fn run_all(config: &ExperimentConfig) -> Result<Vec<RunOutcome>> {
    config.validate()?;
    Ok((0..config.runs)
        .into_par_iter()
        .map(|run| run_single(config, config.optimizer, run))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_run_index_shares_problem_across_optimisers() {
        let mut cfg = ExperimentConfig::new(ProblemKind::LinearSsm, OptimizerKind::ClassicBfgs);
        cfg.data_length = 20;
        let a = build_problem(&cfg, 3).unwrap();
        cfg.optimizer = OptimizerKind::Alg2SurrogateGp;
        let b = build_problem(&cfg, 3).unwrap();
        assert_eq!(a.x0, b.x0);
        assert_eq!(a.data, b.data);
        let c = build_problem(&cfg, 4).unwrap();
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn tenth_policy_scales_truth() {
        let mut cfg = ExperimentConfig::new(ProblemKind::LinearSsm, OptimizerKind::ClassicBfgs);
        cfg.init = InitPolicy::Tenth;
        let p = build_problem(&cfg, 0).unwrap();
        let theta = to_natural(ProblemKind::LinearSsm, &p.x0).unwrap();
        assert!((theta - truth(ProblemKind::LinearSsm) / 10.0).amax() < 1e-12);
    }

    #[test]
    fn relative_error_is_max_over_coordinates() {
        let t = DVector::from_column_slice(&[1.0, 10.0]);
        let e = DVector::from_column_slice(&[1.1, 10.5]);
        assert!((max_relative_error(&e, &t) - 0.1).abs() < 1e-12);
    }
}
