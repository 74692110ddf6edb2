//! Experiment configuration: a flat TOML table.
//!
//! ```toml
//! problem = "linear_ssm"            # quadratic | linear_ssm | nonlinear_ssm
//! optimizer = "alg2_surrogate_gp"   # alg1_hessian_gp | alg2_surrogate_gp | classic_bfgs
//! runs = 10
//! data_length = 100                 # N, state-space problems only
//! particles = 500                   # M, nonlinear_ssm only
//! k_max = 100
//! epsilon = 1e-6
//! init = "uniform50"                # uniform50 | tenth
//! master_seed = 1
//! cost_noise_sd = 100.0             # quadratic and linear_ssm
//! grad_noise_sd = 5.0
//! alg1_b1 = 100.0                   # B₁ = alg1_b1 · I
//! alg1_c1 = 1.0                     # C₁ = alg1_c1 · I
//! alg1_v = 1e-3                     # V = alg1_v · I
//! alg1_sigma_sq = 1.0
//! alg2_sigma = 200.0                # prior standard deviation σ
//! alg2_v = [2.0, 2.0, 2.0, 20.0]    # diagonal of V
//! ```
//!
//! Every key except `problem` and `optimizer` is optional; unknown keys are
//! rejected. Problem-dependent defaults are listed on [`ExperimentConfig`].

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Quadratic,
    LinearSsm,
    NonlinearSsm,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::Quadratic => "quadratic",
            ProblemKind::LinearSsm => "linear_ssm",
            ProblemKind::NonlinearSsm => "nonlinear_ssm",
        }
    }

    /// Number of optimised parameters.
    pub fn dim(&self) -> usize {
        match self {
            ProblemKind::Quadratic => 1,
            ProblemKind::LinearSsm => 4,
            ProblemKind::NonlinearSsm => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Alg1HessianGp,
    Alg2SurrogateGp,
    ClassicBfgs,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [
        OptimizerKind::Alg1HessianGp,
        OptimizerKind::Alg2SurrogateGp,
        OptimizerKind::ClassicBfgs,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            OptimizerKind::Alg1HessianGp => "alg1_hessian_gp",
            OptimizerKind::Alg2SurrogateGp => "alg2_surrogate_gp",
            OptimizerKind::ClassicBfgs => "classic_bfgs",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitPolicy {
    /// Each parameter drawn uniformly within ±50% of its true value.
    Uniform50,
    /// Every parameter at a tenth of its true value.
    Tenth,
}

/// Validated experiment description.
///
/// Defaults that depend on the problem:
///
/// | key             | quadratic | linear_ssm         | nonlinear_ssm |
/// |-----------------|-----------|--------------------|---------------|
/// | `cost_noise_sd` | 20        | 0                  | n/a           |
/// | `grad_noise_sd` | 1         | 0                  | n/a           |
/// | `alg2_sigma`    | 1000      | 200                | 1000          |
/// | `alg2_v`        | [0.01]    | [2, 2, 2, 20]      | [0.01, 1]     |
///
/// State-space parameters are optimised in `(a, c, ln q, ln r)` and
/// `(b, ln q)`; `alg2_v` and `alg1_v` refer to those coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub optimizer: OptimizerKind,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_data_length")]
    pub data_length: usize,
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_init")]
    pub init: InitPolicy,
    /// Fixed starting point in natural coordinates; overrides `init`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_noise_sd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_noise_sd: Option<f64>,
    #[serde(default = "default_alg1_b1")]
    pub alg1_b1: f64,
    #[serde(default = "default_alg1_c1")]
    pub alg1_c1: f64,
    #[serde(default = "default_alg1_v")]
    pub alg1_v: f64,
    #[serde(default = "default_alg1_sigma_sq")]
    pub alg1_sigma_sq: f64,
    /// Running-mean window threshold on `‖ĝ‖` for the optional early stop.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alg1_early_stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alg2_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alg2_v: Option<Vec<f64>>,
    #[serde(default = "default_capacity")]
    pub alg2_capacity: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alg2_max_observations: Option<usize>,
    /// Relative-error threshold of the convergence screen.
    #[serde(default = "default_screen_threshold")]
    pub screen_threshold: f64,
}

fn default_runs() -> usize {
    1
}
fn default_data_length() -> usize {
    100
}
fn default_particles() -> usize {
    500
}
fn default_k_max() -> usize {
    100
}
fn default_epsilon() -> f64 {
    1e-6
}
fn default_init() -> InitPolicy {
    InitPolicy::Uniform50
}
fn default_alg1_b1() -> f64 {
    100.0
}
fn default_alg1_c1() -> f64 {
    1.0
}
fn default_alg1_v() -> f64 {
    1e-3
}
fn default_alg1_sigma_sq() -> f64 {
    1.0
}
fn default_capacity() -> usize {
    crate::surrogate_gp::DEFAULT_CAPACITY
}
fn default_screen_threshold() -> f64 {
    0.05
}

impl ExperimentConfig {
    /// Defaults for everything except the two required keys.
    pub fn new(problem: ProblemKind, optimizer: OptimizerKind) -> Self {
        Self {
            problem,
            optimizer,
            runs: default_runs(),
            data_length: default_data_length(),
            particles: default_particles(),
            k_max: default_k_max(),
            epsilon: default_epsilon(),
            init: default_init(),
            initial: None,
            master_seed: 0,
            cost_noise_sd: None,
            grad_noise_sd: None,
            alg1_b1: default_alg1_b1(),
            alg1_c1: default_alg1_c1(),
            alg1_v: default_alg1_v(),
            alg1_sigma_sq: default_alg1_sigma_sq(),
            alg1_early_stop: None,
            alg2_sigma: None,
            alg2_v: None,
            alg2_capacity: default_capacity(),
            alg2_max_observations: None,
            screen_threshold: default_screen_threshold(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config fields are all serialisable")
    }

    pub fn cost_noise(&self) -> f64 {
        self.cost_noise_sd.unwrap_or(match self.problem {
            ProblemKind::Quadratic => 20.0,
            _ => 0.0,
        })
    }

    pub fn grad_noise(&self) -> f64 {
        self.grad_noise_sd.unwrap_or(match self.problem {
            ProblemKind::Quadratic => 1.0,
            _ => 0.0,
        })
    }

    pub fn surrogate_sigma(&self) -> f64 {
        self.alg2_sigma.unwrap_or(match self.problem {
            ProblemKind::LinearSsm => 200.0,
            _ => 1e3,
        })
    }

    pub fn surrogate_v(&self) -> Vec<f64> {
        self.alg2_v.clone().unwrap_or_else(|| match self.problem {
            ProblemKind::Quadratic => vec![0.01],
            ProblemKind::LinearSsm => vec![2.0, 2.0, 2.0, 20.0],
            ProblemKind::NonlinearSsm => vec![0.01, 1.0],
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let dim = self.problem.dim();
        if self.data_length == 0 {
            return bad("data_length must be at least 1".into());
        }
        if self.particles == 0 {
            return bad("particles must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if let Some(x0) = &self.initial {
            if x0.len() != dim || x0.iter().any(|v| !v.is_finite()) {
                return bad(format!("initial must hold {dim} finite values"));
            }
        }
        if self.problem == ProblemKind::NonlinearSsm
            && (self.cost_noise_sd.is_some() || self.grad_noise_sd.is_some())
        {
            return bad("nonlinear_ssm noise comes from the particle filter; \
                        cost_noise_sd and grad_noise_sd do not apply"
                .into());
        }
        for (name, v) in [
            ("cost_noise_sd", self.cost_noise_sd),
            ("grad_noise_sd", self.grad_noise_sd),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return bad(format!("{name} must be finite and non-negative"));
                }
            }
        }
        for (name, v) in [
            ("alg1_b1", self.alg1_b1),
            ("alg1_c1", self.alg1_c1),
            ("alg1_v", self.alg1_v),
            ("alg1_sigma_sq", self.alg1_sigma_sq),
            ("alg2_sigma", self.surrogate_sigma()),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        if let Some(t) = self.alg1_early_stop {
            if !(t > 0.0) {
                return bad("alg1_early_stop must be positive".into());
            }
        }
        let v = self.surrogate_v();
        if v.len() != dim || v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return bad(format!("alg2_v must hold {dim} positive values"));
        }
        if self.alg2_capacity <= crate::surrogate_gp::ELITE_COUNT {
            return bad(format!(
                "alg2_capacity must exceed {}",
                crate::surrogate_gp::ELITE_COUNT
            ));
        }
        if self.alg2_max_observations == Some(0) {
            return bad("alg2_max_observations must be positive".into());
        }
        if !(self.screen_threshold >= 0.0) {
            return bad("screen_threshold must be non-negative".into());
        }
        Ok(())
    }
}
