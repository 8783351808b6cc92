//! `agtrap` — batch front end for the trap-array toolkit.
//!
//! Four subcommands: `simulate` (relay a mask and measure its traps),
//! `talbot` (axial lattice scans, revival location, broadband mitigation),
//! `sweep` (darkness maps over hole phase and iris size), and `constants`
//! (live-computed calibration table on stdout).
//!
//! Exit codes are a stable contract: 0 on success, 2 for configuration or
//! validation problems (including malformed JSON and bad flags), 3 for
//! numerical or I/O failures after validation.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use commands::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "agtrap", version, about = "Passive Fourier-filtered optical trap arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Relay one mask through the 4f system and measure every trap site.
    Simulate(RunArgs),
    /// Scan a lattice image along the axis: revival location and mitigation.
    Talbot(RunArgs),
    /// Map the center darkness over hole phase and iris size.
    Sweep(RunArgs),
    /// Print the toolkit's calibration constants as CSV on stdout.
    Constants,
}

/// Flags shared by all artifact-producing subcommands.
#[derive(Args)]
pub struct RunArgs {
    /// JSON run configuration (schema documented in the README).
    #[arg(long)]
    pub config: PathBuf,
    /// Artifact directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for stochastic source realizations.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Cross-check the FFT engine against the closed forms inline.
    #[arg(long, default_value_t = false)]
    pub verify_fft: bool,
}

fn init_threads(threads: usize) -> Result<(), CliError> {
    if threads == 0 {
        return Ok(()); // rayon defaults to one worker per core
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => {
            init_threads(a.threads)?;
            commands::simulate(a)
        }
        Command::Talbot(a) => {
            init_threads(a.threads)?;
            commands::talbot(a)
        }
        Command::Sweep(a) => {
            init_threads(a.threads)?;
            commands::sweep(a)
        }
        Command::Constants => commands::constants(),
    }
}

fn main() -> ExitCode {
    match run(&Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("numerical error: {msg}");
            ExitCode::from(3)
        }
    }
}
