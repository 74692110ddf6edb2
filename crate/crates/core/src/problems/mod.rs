//! Noisy evaluation oracles: the scalar quadratic, the linear Gaussian
//! state-space model (exact Kalman likelihood plus injected noise) and the
//! nonlinear benchmark (particle-filter likelihood with Fisher-identity
//! gradients).

mod bode;
mod data_io;
mod lgss;
mod nlss;
mod oracle;
mod pf;
mod quadratic;

pub use bode::{default_bode_grid, log_spaced, transfer_function, BodePoint, BodeResponse};
pub use data_io::{read_series_csv, write_series_csv};
pub use lgss::{
    kalman_loglik_grad, kalman_loglik_grad_transformed, noisy_lgss_oracle, simulate_lgss,
    simulate_lgss_from, LgssOracle, LinearSsmParams, LGSS_COST_NOISE_SD, LGSS_GRAD_NOISE_SD,
};
pub use nlss::{
    nonlinear_oracle, simulate_nlss, simulate_nlss_path, transition_log_density, transition_score,
    NonlinearOracle, NonlinearSsmParams, NLSS_MEAS_VAR,
};
pub use oracle::{estimate_noise, Evaluation, NoiseLevels, NoisyOracle};
pub use pf::{
    bootstrap_pf, fisher_gradient, loglik_and_score, path_score, ParticleSystem, StateSpaceModel,
};
pub use quadratic::{quadratic_oracle, FunctionOracle, QuadraticOracle, QUADRATIC_MINIMIZER};
