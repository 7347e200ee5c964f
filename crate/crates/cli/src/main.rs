//! `rwrs`: reproducible experiments for random walks in random sceneries.

mod config;
mod experiments;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use config::Config;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] rwrs_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Parser)]
#[command(name = "rwrs", version, about = "Random walk in random scenery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file.
    #[arg(long, global = true, env = "RWRS_CONFIG")]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true, env = "RWRS_SEED")]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "RWRS_WORKERS", default_value_t = 1)]
    workers: usize,
    /// Output directory.
    #[arg(long, global = true, env = "RWRS_OUT", default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, env = "RWRS_FORMAT", value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Clone, Copy, Debug, Subcommand)]
pub enum Command {
    /// Self-intersection laws of large numbers.
    Lln,
    /// Finite-dimensional distributions of the rescaled process.
    Fclt,
    /// Exact conditional variance against Monte Carlo.
    Variance,
    /// Partition counts and Leonov statistics.
    Cumulants,
    /// Newman-Wright and Moricz maximal inequalities.
    Maximal,
    /// Checks a commuting pair of toral automorphisms.
    ToralVerify,
    /// Regression estimate of C0.
    EstimateC0,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Lln => "lln",
            Command::Fclt => "fclt",
            Command::Variance => "variance",
            Command::Cumulants => "cumulants",
            Command::Maximal => "maximal",
            Command::ToralVerify => "toral-verify",
            Command::EstimateC0 => "estimate-c0",
        }
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    if cli.workers == 0 {
        return Err(CliError::Validation("--workers must be at least 1".into()));
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Validation("no config given (--config or RWRS_CONFIG)".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut config = Config::parse(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    config.seed = Some(config.seed());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let mut report = pool.install(|| experiments::run(cli.command, &config))?;
    let elapsed = start.elapsed();
    let hash = output::config_hash(&config)?;
    report.provenance.config_hash = Some(hash.clone());
    report.provenance.master_seed = config.seed;

    let files = output::write_report(&cli.out, cli.command.name(), &report, cli.format)?;
    output::write_manifest(&cli.out, cli.command.name(), &hash, config.seed(), &files, elapsed)?;

    for v in report.verdicts.iter().filter(|v| !v.passed) {
        eprintln!("FAIL {} (statistic {:e})", v.criterion, v.statistic);
    }
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
