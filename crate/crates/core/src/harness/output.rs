//! CSV and manifest files written for an experiment.
//!
//! | file           | columns                                                     |
//! |----------------|-------------------------------------------------------------|
//! | `iterates.csv` | `run_id,iter,p1..pn,cost,gradnorm,step,status`              |
//! | `summary.csv`  | `run_id,p1..pn,rel_err,converged,status`                    |
//! | `bode.csv`     | `run_id,omega,mag,phase,true_mag,true_phase` (linear_ssm)   |
//! | `data/run_<id>.csv` | `t,y` (state-space problems)                           |
//! | `manifest.txt` | `key = value` lines, then the config as TOML                |
//!
//! Parameters are in natural coordinates. Floats use Rust's shortest
//! round-trip formatting, so rereading a file reproduces the values exactly.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, ProblemKind};
use super::experiment::{run_all, to_natural, RunOutcome};
use crate::error::{Error, Result};
use crate::problems::{default_bode_grid, transfer_function, write_series_csv, LinearSsmParams};

fn param_headers(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("p{i}")).collect()
}

fn fmt(v: f64) -> String {
    v.to_string()
}

pub fn write_iterates(path: &Path, problem: ProblemKind, outcomes: &[RunOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["run_id".to_string(), "iter".to_string()];
    header.extend(param_headers(problem.dim()));
    header.extend(["cost", "gradnorm", "step", "status"].map(String::from));
    w.write_record(&header)?;
    for o in outcomes {
        let Some(trace) = &o.trace else { continue };
        for r in &trace.records {
            let theta = to_natural(problem, &r.x)?;
            let mut row = vec![o.run_id.to_string(), r.iteration.to_string()];
            row.extend(theta.iter().map(|v| fmt(*v)));
            row.extend([
                fmt(r.cost),
                fmt(r.grad_norm),
                fmt(r.step),
                r.status.as_str().to_string(),
            ]);
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(
    path: &Path,
    problem: ProblemKind,
    outcomes: &[RunOutcome],
    threshold: f64,
) -> Result<()> {
    let dim = problem.dim();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["run_id".to_string()];
    header.extend(param_headers(dim));
    header.extend(["rel_err", "converged", "status"].map(String::from));
    w.write_record(&header)?;
    for o in outcomes {
        let mut row = vec![o.run_id.to_string()];
        match &o.final_params {
            Some(p) => row.extend(p.iter().map(|v| fmt(*v))),
            None => row.extend(std::iter::repeat_n(fmt(f64::NAN), dim)),
        }
        row.extend([
            fmt(o.rel_err),
            o.converged(threshold).to_string(),
            o.status.label(),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Bode response of every run's `(a, c)` estimate next to the true system.
pub fn write_bode(path: &Path, runs: &[(usize, Option<(f64, f64)>)]) -> Result<()> {
    let grid = default_bode_grid();
    let t = LinearSsmParams::TRUTH;
    let truth = transfer_function(t.a, t.c, &grid);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["run_id", "omega", "mag", "phase", "true_mag", "true_phase"])?;
    for (run_id, ac) in runs {
        let Some((a, c)) = ac else { continue };
        let est = transfer_function(*a, *c, &grid);
        for (p, tp) in est.points.iter().zip(&truth.points) {
            w.write_record([
                run_id.to_string(),
                fmt(p.omega),
                fmt(p.magnitude),
                fmt(p.phase),
                fmt(tp.magnitude),
                fmt(tp.phase),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_manifest(
    path: &Path,
    config: &ExperimentConfig,
    extra: &[(String, String)],
) -> Result<()> {
    let mut text = String::new();
    text.push_str(&format!(
        "package = {} {}\n",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION")
    ));
    for (k, v) in extra {
        text.push_str(&format!("{k} = {v}\n"));
    }
    text.push_str("\n[config]\n");
    text.push_str(&config.to_toml_string());
    fs::write(path, text)?;
    Ok(())
}

/// Paths of the files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentFiles {
    pub dir: PathBuf,
    pub iterates: PathBuf,
    pub summary: PathBuf,
    pub bode: Option<PathBuf>,
    pub manifest: PathBuf,
}

/// Runs every configured run and writes the result files into `out_dir`.
///
/// `extra` is echoed into the manifest (for example the command-line flags).
/// Failing runs are recorded in `summary.csv` and do not stop the others.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    extra: &[(String, String)],
) -> Result<(ExperimentFiles, Vec<RunOutcome>)> {
    let outcomes = run_all(config)?;
    fs::create_dir_all(out_dir)?;
    let files = ExperimentFiles {
        dir: out_dir.to_path_buf(),
        iterates: out_dir.join("iterates.csv"),
        summary: out_dir.join("summary.csv"),
        bode: (config.problem == ProblemKind::LinearSsm).then(|| out_dir.join("bode.csv")),
        manifest: out_dir.join("manifest.txt"),
    };
    write_manifest(&files.manifest, config, extra)?;
    write_iterates(&files.iterates, config.problem, &outcomes)?;
    write_summary(
        &files.summary,
        config.problem,
        &outcomes,
        config.screen_threshold,
    )?;
    if let Some(bode) = &files.bode {
        let runs: Vec<_> = outcomes
            .iter()
            .map(|o| (o.run_id, o.final_params.as_ref().map(|p| (p[0], p[1]))))
            .collect();
        write_bode(bode, &runs)?;
    }
    if config.problem != ProblemKind::Quadratic {
        let data_dir = out_dir.join("data");
        fs::create_dir_all(&data_dir)?;
        for o in &outcomes {
            if let Some(y) = &o.data {
                write_series_csv(&data_dir.join(format!("run_{}.csv", o.run_id)), y)?;
            }
        }
    }
    Ok((files, outcomes))
}

/// One parsed row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub run_id: usize,
    pub params: Vec<f64>,
    pub rel_err: f64,
    pub converged: bool,
    pub status: String,
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let dim = cols.iter().filter(|c| c.starts_with('p')).count();
    let expected: Vec<String> = std::iter::once("run_id".to_string())
        .chain(param_headers(dim))
        .chain(["rel_err", "converged", "status"].map(String::from))
        .collect();
    if cols != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Io(format!(
            "{}: unexpected summary header {:?}",
            path.display(),
            cols
        )));
    }
    let parse_f = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Io(format!("{}: bad number {s:?}", path.display())))
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let run_id = rec[0]
            .parse::<usize>()
            .map_err(|_| Error::Io(format!("{}: bad run_id {:?}", path.display(), &rec[0])))?;
        let params = (1..=dim)
            .map(|i| parse_f(&rec[i]))
            .collect::<Result<Vec<_>>>()?;
        let rel_err = parse_f(&rec[dim + 1])?;
        let converged = match &rec[dim + 2] {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::Io(format!(
                    "{}: bad converged flag {other:?}",
                    path.display()
                )))
            }
        };
        rows.push(SummaryRow {
            run_id,
            params,
            rel_err,
            converged,
            status: rec[dim + 3].to_string(),
        });
    }
    Ok(rows)
}
