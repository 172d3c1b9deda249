//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 usage or configuration problem, 2 verification
//! found a bound violation, 3 runtime failure.

use benchcli::config::{ConfigError, ExperimentConfig, Mode, OUT_DIR_ENV};
use benchcli::runner::run_experiment;
use benchcli::verify::default_verification;
use benchcli::{emit, runner};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_BOUND_VIOLATION: i32 = 2;
const EXIT_RUNTIME: i32 = 3;

/// Default seed for `verify` runs; override with `--seed`.
const DEFAULT_VERIFY_SEED: u64 = 0x0567_ab1e;

#[derive(Parser)]
#[command(
    name = "benchcli",
    about = "Benchmarks and bound verification for greedy sparse regression",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the benchmark described by a config file (mode = "benchmark").
    Bench {
        /// Path to a TOML experiment config.
        config: PathBuf,
        /// Output directory (overrides the config and the environment).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the method/step-size sweep described by a config file
    /// (mode = "sweep").
    Sweep {
        /// Path to a TOML experiment config.
        config: PathBuf,
        /// Output directory (overrides the config and the environment).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the decay and norm bounds on synthetic instances.
    Verify {
        /// Suite to run; only "default" exists.
        #[arg(long, default_value = "default")]
        suite: String,
        /// Output directory for verify_report.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for instance generation.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write trial 0's train/test data for a config as CSV.
    Datagen {
        /// Path to a TOML experiment config.
        config: PathBuf,
        /// Output directory (overrides the config and the environment).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is a
            // usage error.
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(CliError::Config(message)) => {
            eprintln!("error: {message}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(error)) => {
            eprintln!("error: {error:#}");
            EXIT_RUNTIME
        }
    }
}

enum CliError {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Bench { config, out } => run_table(&config, out, Mode::Benchmark),
        Command::Sweep { config, out } => run_table(&config, out, Mode::Sweep),
        Command::Verify { suite, out, seed } => run_verify(&suite, out, seed),
        Command::Datagen { config, out } => run_datagen(&config, out),
    }
}

fn run_table(
    config_path: &Path,
    out: Option<PathBuf>,
    expected_mode: Mode,
) -> Result<i32, CliError> {
    let mut config = ExperimentConfig::load(config_path)?;
    if config.mode != expected_mode {
        return Err(CliError::Config(format!(
            "{} expects a config with mode = \"{}\"",
            command_name(expected_mode),
            mode_name(expected_mode),
        )));
    }
    if let Some(dir) = out {
        config.output_dir = dir;
    }
    let table = run_experiment(&config)?;
    let written = emit::write_outputs(
        &config.output_dir,
        &table,
        config.emit_figures,
        &config.label,
    )?;
    print_summary(&table.summary);
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

fn command_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Benchmark => "bench",
        Mode::Sweep => "sweep",
        Mode::Verify => "verify",
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Benchmark => "benchmark",
        Mode::Sweep => "sweep",
        Mode::Verify => "verify",
    }
}

fn print_summary(summary: &[runner::SummaryRow]) {
    for row in summary {
        let step = if row.step_size > 0 {
            format!("s={}", row.step_size)
        } else {
            "-".to_string()
        };
        println!(
            "{:8} {:>5} {:4} {:3}  rmse {:.4e} +/- {:.1e}  atoms {:6.1}  {:.3}s",
            row.method,
            step,
            row.dictionary,
            row.target,
            row.rmse_mean,
            row.rmse_std,
            row.sparsity_mean,
            row.train_seconds_mean,
        );
    }
}

fn run_verify(suite: &str, out: Option<PathBuf>, seed: Option<u64>) -> Result<i32, CliError> {
    if suite != "default" {
        return Err(CliError::Config(format!(
            "unknown suite '{suite}'; only \"default\" exists"
        )));
    }
    let report = default_verification(seed.unwrap_or(DEFAULT_VERIFY_SEED));
    let out_dir = out.unwrap_or_else(|| {
        std::env::var(OUT_DIR_ENV)
            .ok()
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out/verify"))
    });
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("creating {}: {e}", out_dir.display())))?;
    let report_path = out_dir.join("verify_report.csv");
    let mut buffer = Vec::new();
    report
        .write_csv(&mut buffer)
        .map_err(|e| CliError::Runtime(e.into()))?;
    std::fs::write(&report_path, buffer)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("writing {}: {e}", report_path.display())))?;

    for (name, passed, total) in report.suite_tallies() {
        println!("{name}: {passed}/{total} passed");
    }
    println!("wrote {}", report_path.display());
    if report.all_pass() {
        Ok(EXIT_OK)
    } else {
        for violation in report.violations() {
            eprintln!(
                "violation: {} {} (min relative slack {:.3e})",
                violation.suite, violation.label, violation.min_slack
            );
        }
        Ok(EXIT_BOUND_VIOLATION)
    }
}

fn run_datagen(config_path: &Path, out: Option<PathBuf>) -> Result<i32, CliError> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(dir) = out {
        config.output_dir = dir;
    }
    let target = runner::target_function(&config);
    let (train, test) = runner::trial_datasets(&config, &target, 0)?;

    std::fs::create_dir_all(&config.output_dir).map_err(|e| {
        CliError::Runtime(anyhow::anyhow!("creating {}: {e}", config.output_dir.display()))
    })?;
    for (name, dataset) in [("train.csv", &train), ("test.csv", &test)] {
        let path = config.output_dir.join(name);
        let mut buffer = Vec::new();
        dataset
            .write_xy_csv(&mut buffer)
            .map_err(|e| CliError::Runtime(e.into()))?;
        std::fs::write(&path, buffer).map_err(|e| {
            CliError::Runtime(anyhow::anyhow!("writing {}: {e}", path.display()))
        })?;
        println!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}
