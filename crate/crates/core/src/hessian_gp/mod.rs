//! Quasi-Newton optimisation with a Gaussian-process belief over the
//! Hessian, updated from line-integral observations of gradient differences.

mod belief;
mod direction;
mod line_search;
mod optimizer;
mod quadrature;

pub use belief::{
    integral_observation_operator, line_kernel, posterior_line_mean, secant_operator,
    update_belief, HessianBelief, LineSegment,
};
pub use direction::safeguarded_direction;
pub use line_search::{noisy_line_search, LineSearchOutcome, NoisyLineSearchParams};
pub use optimizer::{optimize_alg1, EarlyStop, OptimizerParams};
pub use quadrature::GaussLegendre;
