use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use quasidim_cli::config::ExperimentConfig;
use quasidim_cli::{run, Subcommand};

/// Quasiline experiments: Beltrami solves, canonical decompositions,
/// holomorphic motions, covering sums and dimension sweeps.
#[derive(Parser, Debug)]
#[command(name = "quasidim", version)]
struct Cli {
    #[arg(value_enum)]
    command: Subcommand,
    /// TOML configuration; all keys are optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the grid size (a power of two).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path),
        None => Ok(ExperimentConfig::default()),
    };
    let mut cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.grid {
        cfg.grid.n = n;
    }
    if let Some(o) = cli.out {
        cfg.output = o;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli.command, &cfg, &cfg.output, cli.quiet) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("contract violated; see the reports in {}", cfg.output.display());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
