//! `repeaterscope`: runs named experiments and the validation suite.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use repeaterscope_core::config::{parse_config, Config};
use repeaterscope_core::experiments::{run_experiment, EXPERIMENTS};
use repeaterscope_core::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "repeaterscope",
    version,
    about = "Quantum repeater chain performance engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment and write its CSV files.
    Run {
        /// One of relay-expectation, mtp-sweep, envelope-compare,
        /// cost-compare, validate.
        experiment: String,
        /// `key = value` configuration file; an empty file means defaults.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the engine-versus-oracle suite and print a pass/fail table.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args)]
struct Overrides {
    /// Output directory (default from config, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials for validation.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
}

fn load(path: Option<&Path>) -> Result<Config, String> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => String::new(),
    };
    parse_config(&text).map_err(|e| match (path, e) {
        (Some(p), Error::Config { line, msg }) => format!("{}:{line}: {msg}", p.display()),
        (_, e) => e.to_string(),
    })
}

fn execute(experiment: &str, config: Option<&Path>, o: Overrides) -> ExitCode {
    if !EXPERIMENTS.contains(&experiment) {
        eprintln!(
            "error: unknown experiment `{experiment}` (expected one of: {})",
            EXPERIMENTS.join(", ")
        );
        return ExitCode::from(EXIT_USAGE);
    }
    let mut cfg = match load(config) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(t) = o.trials {
        cfg.trials = t;
    }
    let out_dir = o.out.unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    match run_experiment(experiment, &cfg, &out_dir) {
        Ok(out) => {
            for line in &out.summary {
                println!("{line}");
            }
            for (file, _) in &out.files {
                println!("wrote {}", out_dir.join(file).display());
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VALIDATION)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            experiment,
            config,
            overrides,
        } => execute(&experiment, Some(&config), overrides),
        Command::Validate { config, overrides } => {
            execute("validate", config.as_deref(), overrides)
        }
    }
}
