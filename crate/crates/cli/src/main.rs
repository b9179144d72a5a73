//! `helmcouple` command-line front end.
//!
//! Every subcommand reads one JSON configuration and writes its artifacts
//! into the output directory. Exit codes: 0 success, 1 failed verification,
//! 2 usage, configuration or I/O error, 3 numerical failure.

mod config;
mod eig;
mod error;
mod output;
mod solve;
mod sweep;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;
use output::OutDir;

const DEFAULT_OUT: &str = "helmcouple-out";

#[derive(Debug, Parser)]
#[command(
    name = "helmcouple",
    version,
    about = "FEM-BEM coupling for 2D Helmholtz transmission problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for assembly and sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the property checks at one configuration and report pass/fail.
    Verify(Common),
    /// Sweep smallest singular values over a frequency grid and locate dips.
    Sweep(Common),
    /// Solve the transmission problem for an incident plane wave.
    Solve(Common),
    /// Interior Dirichlet and Neumann eigenvalues of the FEM mesh.
    Eig(Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, cmd): (&Common, fn(&RunConfig, &OutDir) -> Result<(), CliError>) =
        match &cli.command {
            Command::Verify(c) => (c, verify::run),
            Command::Sweep(c) => (c, sweep::run),
            Command::Solve(c) => (c, solve::run),
            Command::Eig(c) => (c, eig::run),
        };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let config = RunConfig::load(&common.config)?;
    let dir = common
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let out = OutDir::create(&dir, config.hash())?;
    cmd(&config, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
