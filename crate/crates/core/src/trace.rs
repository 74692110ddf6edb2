//! Iterate records shared by every optimiser.

use nalgebra::DVector;

use crate::error::Error;

/// What happened at one iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterStatus {
    /// Initial point.
    Start,
    /// Step accepted by the line search.
    Accepted,
    /// No trial met the acceptance rule; the best observed trial was taken.
    Fallback,
    /// Step taken but the curvature pair was discarded.
    SkippedUpdate,
    /// Strong-Wolfe search gave up; the run stops here.
    LineSearchFailed,
}

impl IterStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            IterStatus::Start => "start",
            IterStatus::Accepted => "ok",
            IterStatus::Fallback => "fallback",
            IterStatus::SkippedUpdate => "skip_update",
            IterStatus::LineSearchFailed => "ls_failed",
        }
    }
}

/// One row of an optimisation trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub iteration: usize,
    pub x: DVector<f64>,
    /// Cost estimate at `x`: the observed value, or the surrogate mean for
    /// the surrogate optimiser.
    pub cost: f64,
    /// Norm of the gradient estimate at `x`, observed or surrogate likewise.
    pub grad_norm: f64,
    /// Step length that produced `x` (0 for the initial point).
    pub step: f64,
    pub status: IterStatus,
    /// Half-vectorised Hessian estimate held after this iterate, if the
    /// optimiser keeps one.
    pub hessian_vech: Option<DVector<f64>>,
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    MaxIterations,
    /// Gradient (or surrogate gradient) fell below the tolerance.
    Converged,
    LineSearchFailure,
    Failed(Error),
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::MaxIterations => "max_iter",
            Termination::Converged => "converged",
            Termination::LineSearchFailure => "ls_failure",
            Termination::Failed(_) => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    /// Hyperparameters echoed by the optimiser, as `(key, value)` pairs.
    pub header: Vec<(String, String)>,
    pub records: Vec<IterateRecord>,
    pub termination: Termination,
    /// Total oracle calls, including noise-estimation samples.
    pub evaluations: usize,
}

impl OptimizationTrace {
    pub fn new(header: Vec<(String, String)>) -> Self {
        Self {
            header,
            records: Vec::new(),
            termination: Termination::MaxIterations,
            evaluations: 0,
        }
    }

    pub fn last(&self) -> Option<&IterateRecord> {
        self.records.last()
    }

    /// Final iterate, if any record exists.
    pub fn final_x(&self) -> Option<&DVector<f64>> {
        self.records.last().map(|r| &r.x)
    }

    /// Number of optimiser iterations taken (records minus the start row).
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub(crate) fn push(&mut self, record: IterateRecord) {
        debug_assert!(self
            .records
            .last()
            .is_none_or(|r| r.iteration < record.iteration));
        self.records.push(record);
    }
}
