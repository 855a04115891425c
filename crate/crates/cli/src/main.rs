mod commands;
mod config;
mod data;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{GenerateArgs, Mode, RunOptions, SimulateArgs};
use error::CliError;

/// Identify NARX/NARMAX models with multi-gene genetic programming.
#[derive(Parser)]
#[command(name = "mggp", version)]
struct Cli {
    /// Worker threads for evaluation (0 uses all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Print one line per generation.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a model from a run configuration.
    Identify {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `evolve.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Forward orthogonal regression baseline.
    Froe {
        #[arg(long)]
        config: PathBuf,
    },
    /// Predict with a saved model and report the MSE.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Osa)]
        mode: Mode,
        /// Shooting segment length, initial conditions included.
        #[arg(long)]
        window: Option<usize>,
        /// Prediction CSV; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        output_column: Option<String>,
        #[arg(long, value_delimiter = ',')]
        input_columns: Option<Vec<String>>,
    },
    /// Simulate a built-in system into a `u,y` CSV.
    Generate {
        #[arg(long, default_value = "piroddi")]
        system: String,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        /// Standard deviation of the white noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Moving-average coefficient of the noise.
        #[arg(long, default_value_t = 0.0)]
        ma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Identify { config, seed } => commands::identify(
            &config,
            &RunOptions {
                seed,
                workers: cli.workers,
                verbose: cli.verbose,
            },
        ),
        Command::Froe { config } => commands::run_froe(&config),
        Command::Simulate {
            model,
            data,
            mode,
            window,
            output,
            output_column,
            input_columns,
        } => commands::simulate(&SimulateArgs {
            model: &model,
            data: &data,
            mode,
            window,
            output: output.as_deref(),
            output_column,
            input_columns,
        }),
        Command::Generate {
            system,
            samples,
            noise,
            ma,
            seed,
            output,
        } => commands::generate(&GenerateArgs {
            system: &system,
            samples,
            noise,
            ma,
            seed,
            output: output.as_deref(),
        }),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mggp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
