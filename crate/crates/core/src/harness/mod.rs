//! Configuration, seeded Monte-Carlo execution, CSV output and the
//! convergence screen.

mod config;
mod experiment;
mod output;
mod screen;
mod seed;
mod validate;

pub use config::{ExperimentConfig, InitPolicy, OptimizerKind, ProblemKind};
pub use experiment::{
    build_problem, max_relative_error, run_all, run_optimizer, run_single, to_coordinates,
    to_natural, truth, RunOutcome, RunProblem, RunStatus,
};
pub use output::{
    read_summary, run_experiment, write_bode, write_iterates, write_manifest, write_summary,
    ExperimentFiles, SummaryRow,
};
pub use screen::{screen_runs, ScreenReport};
pub use seed::{derive_seed, splitmix64, DATA_TAG};
pub use validate::{run_validation, Check};
