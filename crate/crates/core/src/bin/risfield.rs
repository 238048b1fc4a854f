//! Command-line driver: `risfield <subcommand> [--config FILE] [--seed N] [--out DIR]`.
//!
//! Prints a JSON summary on stdout. Failures print `{"error": {...}}` and
//! exit 1; usage errors (including unknown subcommands) exit 2.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::builder::PossibleValuesParser;
use clap::Parser;
use serde_json::json;

use risfield::config::{parse_config, ExperimentConfig, MAX_SEED};
use risfield::experiments::{run, Subcommand};
use risfield::Error;

/// Environment variable overriding the worker thread count.
const THREADS_VAR: &str = "RISFIELD_THREADS";

#[derive(Debug, Parser)]
#[command(name = "risfield", version, about = "Reflecting-surface near-field experiments")]
struct Cli {
    #[arg(value_parser = PossibleValuesParser::new(Subcommand::ALL.map(Subcommand::name)))]
    subcommand: String,

    /// TOML experiment manifest; defaults apply to anything it omits.
    #[arg(long, short)]
    config: Option<PathBuf>,

    /// Overrides the manifest seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Directory for CSV and JSON outputs.
    #[arg(long, short, default_value = "risfield-out")]
    out: PathBuf,

    /// Print the effective manifest and exit.
    #[arg(long)]
    dump_config: bool,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut config = match &cli.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        if seed > MAX_SEED {
            return Err(Error::Config {
                path: "--seed".into(),
                reason: format!("must not exceed {MAX_SEED}"),
            });
        }
        config.seed = seed;
    }
    Ok(config)
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Error::Config {
        path: THREADS_VAR.into(),
        reason: format!("must be a positive integer, got `{value}`"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config {
            path: THREADS_VAR.into(),
            reason: e.to_string(),
        })
}

fn execute(cli: &Cli) -> Result<(serde_json::Value, bool), Error> {
    configure_threads()?;
    let config = load(cli)?;
    if cli.dump_config {
        print!("{}", config.to_toml()?);
        return Ok((serde_json::Value::Null, true));
    }
    let subcommand: Subcommand = cli.subcommand.parse()?;
    let start = Instant::now();
    let report = run(subcommand, &config)?;
    let paths = report.write_to(&cli.out)?;
    let mut summary = report.summary.clone();
    summary["output_dir"] = json!(cli.out.display().to_string());
    summary["written"] = json!(paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>());
    summary["runtime_s"] = json!(start.elapsed().as_secs_f64());
    Ok((summary, report.passed()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok((serde_json::Value::Null, _)) => ExitCode::SUCCESS,
        Ok((summary, passed)) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let obj = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            println!("{obj}");
            ExitCode::from(1)
        }
    }
}
