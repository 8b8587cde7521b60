mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::{CliError, Result};

#[derive(Parser, Debug)]
#[command(name = "vdd", version)]
#[command(about = "Variational decision diagrams: build, sample and train VDD wavefunctions", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an ansatz graph and write vdd.json
    Build(RunConfig),
    /// Check a VDD file against the structural invariants
    Validate(RunConfig),
    /// Print the amplitude of one bit string
    Amplitude(RunConfig),
    /// Write the full state vector as CSV
    Statevector(RunConfig),
    /// Print the ground energy of a model
    Eigen(RunConfig),
    /// Draw samples from a VDD, with local energies if a model is given
    Sample(RunConfig),
    /// Train a VDD and write trace.csv and final_vdd.json
    Train(RunConfig),
    /// Gradient-variance scan over system sizes
    VarianceScan(RunConfig),
    /// Trained TFIM error across field strengths
    GSweep(RunConfig),
    /// Training curves for the five reference models
    Curves(RunConfig),
    /// Render two CSV columns as an SVG line chart
    Plot(RunConfig),
}

fn run(command: Command) -> Result<()> {
    let (flags, handler): (RunConfig, fn(RunConfig) -> Result<()>) = match command {
        Command::Build(c) => (c, commands::build),
        Command::Validate(c) => (c, commands::validate),
        Command::Amplitude(c) => (c, commands::amplitude),
        Command::Statevector(c) => (c, commands::statevector),
        Command::Eigen(c) => (c, commands::eigen),
        Command::Sample(c) => (c, commands::sample),
        Command::Train(c) => (c, commands::train_cmd),
        Command::VarianceScan(c) => (c, commands::variance_scan_cmd),
        Command::GSweep(c) => (c, commands::g_sweep_cmd),
        Command::Curves(c) => (c, commands::curves),
        Command::Plot(c) => (c, commands::plot),
    };
    let mut cfg = RunConfig::resolve(flags)?;
    let threads = cfg.threads()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::config("threads", e.to_string()))?;
    handler(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invalid(_)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
