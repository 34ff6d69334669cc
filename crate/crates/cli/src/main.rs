use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pseudomode_cli::commands::{self, apply_overrides, print};
use pseudomode_cli::config::RunConfig;
use pseudomode_cli::CliError;

#[derive(Debug, Parser)]
#[command(name = "pseudomode", version, about = "Pseudomode mapping and open-system dynamics from a TOML config")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Path to the TOML run config.
    config: PathBuf,
    /// Override `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Override `output.path` (a directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print and write the discrete and regularized mode sets.
    Map(RunArgs),
    /// Integrate the master equation and write a CSV of observables.
    Evolve(RunArgs),
    /// Run an MCWF ensemble and write ensemble means and standard errors.
    Trajectories(RunArgs),
    /// Run the consistency checks that apply to the configured model.
    Validate(RunArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::Map(args) | Command::Evolve(args) | Command::Trajectories(args) | Command::Validate(args)) =
        &cli.command;
    let mut config = RunConfig::load(&args.config)?;
    apply_overrides(&mut config, args.seed, args.out.clone());
    let out = config.output.path.clone();

    match cli.command {
        Command::Map(_) => {
            let report = commands::cmd_map(&config, &out)?;
            print(&report.render());
        }
        Command::Evolve(_) => {
            let s = commands::cmd_evolve(&config, &out)?;
            print(&format!("{:?}: {} rows, step {:.3e} -> {}\n", s.kind, s.rows, s.step, s.csv.display()));
        }
        Command::Trajectories(_) => {
            let s = commands::cmd_trajectories(&config, &out)?;
            print(&format!(
                "{:?}: {} trajectories (seed {}), jumps per channel {:?} -> {}\n",
                s.kind,
                s.n_traj,
                s.seed,
                s.jump_counts,
                s.csv.display()
            ));
        }
        Command::Validate(_) => {
            let report = commands::cmd_validate(&config, &out)?;
            print(&report.render());
            if !report.passed {
                return Err(CliError::Check("validation failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
