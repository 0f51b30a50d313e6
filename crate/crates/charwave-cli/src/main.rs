//! `charwave`: run one experiment from a JSON config and write CSV/JSON
//! outputs plus a `manifest.json` with checksums into the output directory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver failure.

// Guards are written `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Failure;
use crate::config::Config;

#[derive(Parser, Debug)]
#[command(name = "charwave", version, about = "Conservative nonlinear waves in characteristic coordinates")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration; defaults apply to omitted fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for randomized suites; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Solve the characteristic chart of a datum.
    Solve,
    /// Reconstruct physical slices `t = tau` and their energies.
    Slice,
    /// Detect the singular set `alpha = pi`, `beta = pi` and classify its points.
    Singularities,
    /// Lengths of a path of data at the slice times.
    Metric,
    /// Length ratios of straddling paths against the growth envelope.
    Lipschitz,
    /// Upper and lower distance bounds on a suite of pairs.
    Bounds,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Slice => "slice",
            Command::Singularities => "singularities",
            Command::Metric => "metric",
            Command::Lipschitz => "lipschitz",
            Command::Bounds => "bounds",
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p).map_err(Failure::Config)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(anyhow::anyhow!("thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| Failure::Config(anyhow::anyhow!("creating {}: {e}", cli.out.display())))?;
    let started = std::time::Instant::now();
    let outputs = match cli.command {
        Command::Solve => commands::solve(&cfg, &cli.out),
        Command::Slice => commands::slice(&cfg, &cli.out),
        Command::Singularities => commands::singularities(&cfg, &cli.out),
        Command::Metric => commands::metric(&cfg, &cli.out),
        Command::Lipschitz => commands::lipschitz(&cfg, &cli.out),
        Command::Bounds => commands::bounds(&cfg, &cli.out),
    }?;
    manifest::write(&cli.out, cli.command.name(), &cfg, cli.config.as_deref(), &outputs, started.elapsed())
        .map_err(Failure::Solver)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver failure: {e:#}");
            ExitCode::from(3)
        }
    }
}
