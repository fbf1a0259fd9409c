use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use proxgen_cli::config::{ConfigError, ExperimentConfig, ExperimentKind, Violation};
use proxgen_cli::{exit, run_experiment, write_results, RunError};

/// Runs one experiment and writes `<out>/<experiment>.csv` and
/// `<out>/<experiment>.summary.json`. Exits 0 when every threshold is met,
/// 1 when one is missed, 2 on an invalid configuration and 3 on any other error.
#[derive(Debug, Parser)]
#[command(name = "proxgen", version)]
struct Cli {
    /// simlemma, genrl-strong, genrl-weak, lb-scan, sio-bench, prop1-gap or metarl.
    experiment: ExperimentKind,
    /// Configuration file; documented defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; trial seeds derive from it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory; falls back to the config, then PROXGEN_OUT, then `results`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.display().to_string(),
                source,
            })?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::defaults(cli.experiment),
    };
    if config.experiment != cli.experiment {
        return Err(ConfigError::Validation(vec![Violation {
            key: "experiment".into(),
            message: format!("config is for {}, command asked for {}", config.experiment, cli.experiment),
        }]));
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        config.trials = trials;
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(cli: &Cli, config: &ExperimentConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os("PROXGEN_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load(&cli) {
        Ok(c) => c,
        Err(ConfigError::Io { path, source }) => {
            eprintln!("error: cannot read {path}: {source}");
            return ExitCode::from(exit::RUNTIME_ERROR as u8);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit::INVALID_CONFIG as u8);
        }
    };
    let report = match run_experiment(&config) {
        Ok(r) => r,
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit::INVALID_CONFIG as u8);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit::RUNTIME_ERROR as u8);
        }
    };
    let dir = out_dir(&cli, &config);
    let (csv_path, json_path) = match write_results(&report.rows, &report.summary, &dir) {
        Ok(paths) => paths,
        Err(e) => {
            eprintln!("error: cannot write results to {}: {e}", dir.display());
            return ExitCode::from(exit::RUNTIME_ERROR as u8);
        }
    };
    for c in &report.summary.checks {
        let mark = if c.passed { "pass" } else { "FAIL" };
        println!("{mark} {} = {} ({} {})", c.name, c.measured, c.relation, c.threshold);
    }
    println!("rows: {}", csv_path.display());
    println!("summary: {}", json_path.display());
    if report.summary.passed {
        ExitCode::from(exit::PASS as u8)
    } else {
        ExitCode::from(exit::THRESHOLD_FAILED as u8)
    }
}
