use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pipg_cli::{load_config, replay, run_experiment, CliError, Summary};

#[derive(Parser)]
#[command(
    name = "pipg",
    version,
    about = "Run PIPG, IPG and SGD experiments from a JSON config"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured problem and run every solver on it.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured solvers on an exported dataset.
    Replay {
        /// Dataset CSV; ground truth is read from `theta_star.csv` beside it.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<Summary, CliError> {
    match cli.command {
        Command::Run { config, seed, out } => run_experiment(&load_config(&config, seed, out)?),
        Command::Replay {
            data,
            config,
            seed,
            out,
        } => replay(&load_config(&config, seed, out)?, &data),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(summary) => {
            log::info!(
                "wrote {} files to {}",
                summary.files.len(),
                summary.output_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
