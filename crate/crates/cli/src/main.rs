//! `qnd <scenario> --config <path> --out <dir> [--threads N]`

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod scenarios;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use error::CliError;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scenario {
    /// One probe amplitude: observables, Wigner maps and detection report.
    Singlemode,
    /// Detection error and fidelity over a list of probe intensities.
    Sweep,
    /// Wigner maps of the input, transmitted and detected probe.
    Wigner,
    /// Cascaded detection units.
    Cascade,
    /// Real-space wave-packet propagation.
    Multimode,
}

#[derive(Debug, Parser)]
#[command(
    name = "qnd",
    version,
    about = "Nondestructive single-photon detection simulator"
)]
struct Cli {
    scenario: Scenario,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let path: &Path = &cli.config;
    let out: &Path = &cli.out;
    match cli.scenario {
        Scenario::Singlemode => scenarios::run_singlemode(&config::load(path)?, out),
        Scenario::Sweep => scenarios::run_sweep(&config::load(path)?, out),
        Scenario::Wigner => scenarios::run_wigner(&config::load(path)?, out),
        Scenario::Cascade => scenarios::run_cascade(&config::load(path)?, out),
        Scenario::Multimode => scenarios::run_multimode(&config::load(path)?, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qnd: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
