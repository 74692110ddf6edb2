//! Convergence screen over a run summary.

use super::output::SummaryRow;

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenReport {
    /// Input rows with `converged` recomputed for the threshold.
    pub rows: Vec<SummaryRow>,
    pub threshold: f64,
    pub retained: usize,
    /// Run ids marked as diverged.
    pub removed: Vec<usize>,
}

/// Marks runs whose maximum relative parameter error exceeds `threshold`
/// (or is undefined) as diverged.
pub fn screen_runs(summary: &[SummaryRow], threshold: f64) -> ScreenReport {
    let rows: Vec<SummaryRow> = summary
        .iter()
        .map(|r| SummaryRow {
            converged: r.rel_err <= threshold,
            ..r.clone()
        })
        .collect();
    let removed = rows
        .iter()
        .filter(|r| !r.converged)
        .map(|r| r.run_id)
        .collect();
    let retained = rows.iter().filter(|r| r.converged).count();
    ScreenReport {
        rows,
        threshold,
        retained,
        removed,
    }
}

impl ScreenReport {
    /// One-line result, e.g. `retained 9/10 runs (threshold 0.05)`.
    pub fn summary_line(&self) -> String {
        format!(
            "retained {}/{} runs (threshold {})",
            self.retained,
            self.rows.len(),
            self.threshold
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(run_id: usize, rel_err: f64) -> SummaryRow {
        SummaryRow {
            run_id,
            params: vec![1.0],
            rel_err,
            converged: true,
            status: "max_iter".into(),
        }
    }

    #[test]
    fn exact_runs_are_all_kept() {
        let rep = screen_runs(&[row(0, 0.0), row(1, 0.0)], 0.05);
        assert_eq!(rep.retained, 2);
        assert!(rep.removed.is_empty());
    }

    #[test]
    fn ten_percent_run_is_removed() {
        let rep = screen_runs(&[row(0, 0.01), row(1, 0.10), row(2, 0.049)], 0.05);
        assert_eq!(rep.removed, vec![1]);
        assert_eq!(rep.retained, 2);
    }

    #[test]
    fn zero_threshold_removes_any_error() {
        let rep = screen_runs(&[row(0, 0.0), row(1, 1e-9), row(2, f64::NAN)], 0.0);
        assert_eq!(rep.removed, vec![1, 2]);
    }
}
