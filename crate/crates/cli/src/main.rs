use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stochastic_poisson_cli::{list_models, run, Mode, RunConfig, RunError};

#[derive(Parser)]
#[command(version, about = "Stochastic Hamiltonian dynamics on Poisson manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    /// Overrides `integrator.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Writes every output file into this directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an ensemble and write the path CSV and statistics.
    Simulate(RunArgs),
    /// Check antisymmetry, Jacobi, algebroid compatibility and Casimirs.
    Check(RunArgs),
    /// Compare the expanded equations with the compiled dynamics.
    Audit(RunArgs),
    /// Run the mode named in the config.
    Run(RunArgs),
    /// Print the model registry with parameter schemas.
    ListModels,
}

fn execute(args: &RunArgs, mode: Option<Mode>) -> Result<String, RunError> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.integrator.seed = seed;
    }
    if let Some(dir) = &args.out_dir {
        config.outputs.relocate(dir);
    }
    run(&config, mode)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (args, mode) = match &cli.command {
        Command::ListModels => {
            let _ = std::io::stdout().write_all(list_models().as_bytes());
            return ExitCode::SUCCESS;
        }
        Command::Simulate(a) => (a, Some(Mode::Simulate)),
        Command::Check(a) => (a, Some(Mode::Check)),
        Command::Audit(a) => (a, Some(Mode::Audit)),
        Command::Run(a) => (a, None),
    };
    match execute(args, mode) {
        Ok(summary) => {
            let _ = std::io::stdout().write_all(summary.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
