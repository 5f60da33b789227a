use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use levy_invest_cli::{load_config, run, CliError, Command};

/// Optimal investment boundaries under Lévy uncertainty, with Monte Carlo
/// verification of the induced policy.
#[derive(Parser)]
#[command(name = "levy-invest", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Solve the boundary on the configured grid (CSV + JSON).
    Boundary,
    /// Closed-form agreement and integral-equation residuals.
    Verify,
    /// Factor roots, moments and the factorization identity.
    WhCheck,
    /// Objective estimate and first-order-condition residuals of the policy.
    Simulate,
    /// Objective for rescaled boundaries on a shared path pool (CSV + JSON).
    Compare,
    /// Assumption report for the configured profit and model.
    CheckAssumptions,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Boundary => Command::Boundary,
            Sub::Verify => Command::Verify,
            Sub::WhCheck => Command::WhCheck,
            Sub::Simulate => Command::Simulate,
            Sub::Compare => Command::Compare,
            Sub::CheckAssumptions => Command::CheckAssumptions,
        }
    }
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    }
    let path = cli.config.as_ref().ok_or_else(|| CliError::Validation {
        key: "--config".into(),
        message: "a config file is required".into(),
    })?;
    let mut cfg = load_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    run(cli.command.into(), &cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(paths) => {
            let listed: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
            println!("{}", serde_json::json!({ "artifacts": listed }));
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{}", e.to_json());
            ExitCode::from(1)
        }
    }
}
