//! `probqn` command-line driver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use probqn::harness::{
    read_summary, run_experiment, run_validation, screen_runs, write_bode, ExperimentConfig,
};
use probqn::Error;

#[derive(Parser)]
#[command(
    name = "probqn",
    version,
    about = "Noisy quasi-Newton optimisation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment and write CSV results.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
        /// Overrides `runs`.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Apply the relative-error screen to a summary file.
    Screen {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
    },
    /// Bode responses of the linear-system estimates in a summary file.
    Bode {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in invariant checks.
    Validate,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Config(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn run(
    config: &Path,
    seed: Option<u64>,
    out_dir: &Path,
    runs: Option<usize>,
) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(r) = runs {
        cfg.runs = r;
    }
    cfg.validate()?;
    let mut flags = vec![(
        "config".to_string(),
        format!("{:?}", config.display().to_string()),
    )];
    flags.push((
        "out_dir".into(),
        format!("{:?}", out_dir.display().to_string()),
    ));
    if let Some(s) = seed {
        flags.push(("seed".into(), s.to_string()));
    }
    if let Some(r) = runs {
        flags.push(("runs".into(), r.to_string()));
    }
    let (files, outcomes) = run_experiment(&cfg, out_dir, &flags)?;
    let finished = outcomes.iter().filter(|o| o.trace.is_some()).count();
    let converged = outcomes
        .iter()
        .filter(|o| o.converged(cfg.screen_threshold))
        .count();
    println!(
        "{} runs ({} finished, {} within {}) written to {}",
        outcomes.len(),
        finished,
        converged,
        cfg.screen_threshold,
        files.dir.display()
    );
    Ok(())
}

fn screen(summary: &Path, threshold: f64) -> Result<(), Failure> {
    if !(threshold >= 0.0) {
        return Err(Failure::Config(format!(
            "threshold must be non-negative, got {threshold}"
        )));
    }
    let rows = read_summary(summary)?;
    let report = screen_runs(&rows, threshold);
    println!("{}", report.summary_line());
    if !report.removed.is_empty() {
        let ids: Vec<String> = report.removed.iter().map(usize::to_string).collect();
        println!("removed runs: {}", ids.join(" "));
    }
    Ok(())
}

fn bode(summary: &Path, out: &Path) -> Result<(), Failure> {
    let rows = read_summary(summary)?;
    if rows.iter().any(|r| r.params.len() != 4) {
        return Err(Failure::Runtime(format!(
            "{}: Bode responses need linear_ssm summaries with four parameters",
            summary.display()
        )));
    }
    let runs: Vec<_> = rows
        .iter()
        .map(|r| {
            let (a, c) = (r.params[0], r.params[1]);
            (r.run_id, (a.is_finite() && c.is_finite()).then_some((a, c)))
        })
        .collect();
    write_bode(out, &runs)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn validate() -> Result<(), Failure> {
    let checks = run_validation();
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} check(s) failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            seed,
            out_dir,
            runs,
        } => run(config, *seed, out_dir, *runs),
        Command::Screen { summary, threshold } => screen(summary, *threshold),
        Command::Bode { summary, out } => bode(summary, out),
        Command::Validate => validate(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
