use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use edca_cli::commands;
use edca_cli::error::AppError;
use edca_cli::schema::{load_config, load_scenario, ScenarioFile};

/// Proportional-fair EDCA toolkit: analytical model, optimizer and
/// closed-loop contention-window controller with a slot-level simulator.
#[derive(Parser)]
#[command(name = "edca", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate throughput, delay and air-times at the configured CW_min.
    Model {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Compute the proportional-fair operating point.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Evaluate the optimizer across a parameter sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Run the optimizer -> controller -> simulator loop over a scenario.
    ClosedLoop {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// RNG seed (overrides the scenario's).
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated duration in microseconds (overrides the scenario's).
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Model { config, out, quiet } => {
            let cfg = load_config(&config)?;
            commands::cmd_model(&cfg, out.as_deref(), quiet)
        }
        Command::Optimize { config, out, quiet } => {
            let cfg = load_config(&config)?;
            commands::cmd_optimize(&cfg, out.as_deref(), quiet)
        }
        Command::Sweep { config, scenario, out, quiet } => {
            let cfg = load_config(&config)?;
            let sc = load_scenario(&scenario)?;
            commands::cmd_sweep(&cfg, &sc, out.as_deref(), quiet)
        }
        Command::ClosedLoop { config, scenario, seed, duration, out, quiet } => {
            let cfg = load_config(&config)?;
            let sc = match scenario {
                Some(p) => load_scenario(&p)?,
                None => ScenarioFile {
                    name: None,
                    duration_us: None,
                    seed: None,
                    controller: None,
                    events: Vec::new(),
                    sweep: None,
                },
            };
            let seed = seed.or(sc.seed).unwrap_or(1);
            let duration = duration.or(sc.duration_us).ok_or_else(|| {
                AppError::Config("closed-loop needs --duration or scenario duration_us".into())
            })?;
            commands::cmd_closed_loop(&cfg, &sc, seed, duration, out.as_deref(), quiet)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
