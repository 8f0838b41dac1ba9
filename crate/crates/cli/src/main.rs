//! `indefbvp`: hypothesis checks, shooting solves, Poincaré tables, eigenvalues,
//! radial solves and weight-scale scans driven by a TOML config.
//!
//! Exit status: 0 on success, 2 when the hypotheses fail, 1 on any other error.

mod config;
mod tasks;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use config::{Format, Overrides, TaskName};
use tasks::Status;

#[derive(Debug, Parser)]
#[command(name = "indefbvp", version, about)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides `task.name`.
    #[arg(long, value_enum, value_name = "NAME")]
    task: Option<TaskName>,
    /// Overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// ODE tolerance for solve, poincare and radial; eigenvalue tolerance otherwise.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// Worker threads (default: one per core).
    #[arg(long, value_name = "K")]
    threads: Option<usize>,
    /// Overrides `output.formats`.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn run(cli: Cli) -> Result<Status> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let over = Overrides {
        task: cli.task,
        out: cli.out,
        tol: cli.tol,
        format: cli.format,
    };
    let cfg = config::load(&cli.config, &over)?;
    let output = cfg.output.clone();
    let run = tasks::run(cfg)?;

    // Everything is computed; only now touch the file system.
    let formats = output.formats;
    if formats.csv || formats.json {
        fs::create_dir_all(&output.dir)
            .with_context(|| format!("creating {}", output.dir.display()))?;
    }
    for (name, bytes) in &run.csv {
        let path = output.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    if formats.json {
        let path = output.dir.join("report.json");
        let mut json = serde_json::to_string_pretty(&run.report)?;
        json.push('\n');
        fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{}", run.summary);
    Ok(run.report.status)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::HypothesesFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
