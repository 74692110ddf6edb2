//! Global GP surrogate over cost and gradient, minimised by a safeguarded
//! Newton search on its posterior mean.

mod dataset;
mod inner;
mod optimizer;

pub use dataset::{
    SurrogateDataset, SurrogatePrediction, DEFAULT_CAPACITY, DUPLICATE_TOL, ELITE_COUNT,
};
pub use inner::{inner_minimize, inner_minimize_with, InnerOutcome, InnerParams};
pub use optimizer::{optimize_alg2, SurrogateParams};
