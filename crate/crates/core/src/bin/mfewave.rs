//! Command-line front end for the wave experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mfewave::config::{default_config_text, ExperimentConfig, RawConfig};
use mfewave::harness;
use mfewave::MfeError;

#[derive(Parser)]
#[command(
    name = "mfewave",
    version,
    about = "Wave propagation through time-modulated media: direct and \
             coupled-harmonics solvers with Laplace-domain diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Configuration file (key = value lines); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweep points and frequency solves.
    #[arg(long)]
    workers: Option<usize>,
    /// Additional key=value overrides, applied after the config file.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Time-convergence sweep of the direct and coupled integrators.
    Convergence(RunArgs),
    /// Space-time norms of the expansion coefficients over (epsilon, rho).
    Decay(RunArgs),
    /// Energy series, post-source energy change, conserved quantity.
    Energy(RunArgs),
    /// Field dumps u(x,t) and |z_k(x,t)| as CSV matrices (optionally SVG).
    Visualize(RunArgs),
    /// Laplace-domain bound suite and transform solves over an s-grid.
    LaplaceDiag(RunArgs),
    /// Print the default configuration.
    Defaults,
}

fn resolve(args: &RunArgs) -> Result<ExperimentConfig, MfeError> {
    let mut raw = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| MfeError::Config(format!("cannot read {}: {e}", path.display())))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::new(),
    };
    for assignment in &args.overrides {
        raw.set_line(assignment)?;
    }
    if let Some(out) = &args.out {
        raw.set_line(&format!("output.dir={}", out.display()))?;
    }
    if let Some(workers) = args.workers {
        raw.set_line(&format!("workers={workers}"))?;
    }
    ExperimentConfig::from_raw(&raw)
}

fn run(command: &Command) -> Result<(), MfeError> {
    let paths = match command {
        Command::Convergence(args) => harness::run_convergence(&resolve(args)?)?,
        Command::Decay(args) => harness::run_decay(&resolve(args)?)?,
        Command::Energy(args) => harness::run_energy(&resolve(args)?)?,
        Command::Visualize(args) => harness::run_visualize(&resolve(args)?)?,
        Command::LaplaceDiag(args) => harness::run_laplace_diag(&resolve(args)?)?,
        Command::Defaults => {
            print!("{}", default_config_text());
            return Ok(());
        }
    };
    for path in paths {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("mfewave: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
