//! Config-driven experiment runner. Exit codes: 0 success, 2 config error,
//! 3 data error, 4 numeric failure.

mod config;
mod manifest;
mod plot;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use runner::RunError;

#[derive(Parser)]
#[command(name = "statlearn", version, about = "Statistics-aware learning and inference experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config file without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, RunError> {
    ExperimentConfig::from_path(path).map_err(|e| RunError::Config(vec![e]))
}

fn real_main() -> Result<(), RunError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out_dir = runner::resolve_out_dir(out, &cfg);
            runner::run(&cfg, &out_dir)?;
            println!("ok: artifacts in {}", out_dir.display());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            runner::validate_only(&cfg)?;
            println!("ok: config is valid ({})", cfg.kind.as_str());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
