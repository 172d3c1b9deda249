//! Black-box tests of the compiled binary: exit codes, output files, and
//! the environment/flag precedence for output directories.

use benchcli::config::OUT_DIR_ENV;
use benchcli::emit::strip_timing_column;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_benchcli"));
    // Isolate from any ambient output-directory override.
    cmd.env_remove(OUT_DIR_ENV);
    cmd
}

/// Fresh per-test scratch directory under the system temp dir.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("benchcli-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).expect("scratch dir is creatable");
    dir
}

/// A two-trial config that runs in well under a second.
fn small_config(mode: &str, output_dir: &Path) -> String {
    format!(
        r#"mode = "{mode}"
label = "cli_check"
output_dir = "{}"
base_seed = 77
trial_count = 2
train_size = 200
test_size = 100
noise_sigma = 0.05
target = "f1"

[[dictionaries]]
kind = "tpd"
size = 30

[[methods]]
kind = "osga"
step_size = 1
max_iterations = 8
"#,
        output_dir.display()
    )
}

fn write_config(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).expect("config is writable");
    path
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn running_without_arguments_is_a_usage_error() {
    let output = bin().output().expect("binary runs");
    assert_eq!(output.status.code(), Some(1));
    assert!(
        stderr_of(&output).contains("Usage"),
        "stderr should carry the usage text"
    );
}

#[test]
fn help_is_a_success() {
    let output = bin().arg("--help").output().expect("binary runs");
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_of(&output);
    for subcommand in ["bench", "sweep", "verify", "datagen"] {
        assert!(text.contains(subcommand), "help should list {subcommand}");
    }
}

#[test]
fn a_missing_config_file_is_a_usage_error() {
    let dir = scratch("missing-config");
    let output = bin()
        .args(["bench", dir.join("no_such_file.toml").to_str().unwrap()])
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("error"));
}

#[test]
fn a_malformed_config_is_a_usage_error() {
    let dir = scratch("malformed-config");
    let config = write_config(&dir, "broken.toml", "mode = [unclosed\n");
    let output = bin()
        .args(["bench", config.to_str().unwrap()])
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("error"));
}

#[test]
fn an_invalid_config_value_is_a_usage_error() {
    let dir = scratch("invalid-value");
    let contents = small_config("benchmark", &dir.join("out")).replace(
        "trial_count = 2",
        "trial_count = 0",
    );
    let config = write_config(&dir, "zero_trials.toml", &contents);
    let output = bin()
        .args(["bench", config.to_str().unwrap()])
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("trial_count"));
}

#[test]
fn the_bench_command_rejects_a_sweep_config() {
    let dir = scratch("mode-mismatch");
    let config = write_config(&dir, "sweep.toml", &small_config("sweep", &dir.join("out")));
    let output = bin()
        .args(["bench", config.to_str().unwrap()])
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("expects a config with mode"));
    assert!(
        !dir.join("out").exists(),
        "a rejected run must not write outputs"
    );
}

#[test]
fn an_unknown_verify_suite_is_a_usage_error() {
    let output = bin()
        .args(["verify", "--suite", "bogus"])
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("unknown suite"));
}

#[test]
fn verify_writes_an_all_pass_report() {
    let dir = scratch("verify-report");
    let output = bin()
        .args(["verify", "--out", dir.to_str().unwrap(), "--seed", "7"])
        .output()
        .expect("binary runs");
    assert_eq!(
        output.status.code(),
        Some(0),
        "verify failed: {}",
        stderr_of(&output)
    );
    let text = fs::read_to_string(dir.join("verify_report.csv")).expect("report exists");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("suite,label,comparisons,min_slack,pass"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2100, "50 + 50 rate checks and 2 * 1000 norm checks");
    for row in rows {
        assert!(row.ends_with(",true"), "found a failing check: {row}");
    }
    let printed = stdout_of(&output);
    for suite in ["oracle_rate", "l1_ball", "span_norm", "projection_norm"] {
        assert!(printed.contains(suite), "tally for {suite} missing");
    }
}

#[test]
fn datagen_writes_the_sampled_datasets() {
    let dir = scratch("datagen");
    let config = write_config(
        &dir,
        "data.toml",
        &small_config("benchmark", &dir.join("unused")),
    );
    let out = dir.join("data");
    let output = bin()
        .args([
            "datagen",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .expect("binary runs");
    assert_eq!(
        output.status.code(),
        Some(0),
        "datagen failed: {}",
        stderr_of(&output)
    );
    for (name, rows) in [("train.csv", 200), ("test.csv", 100)] {
        let text = fs::read_to_string(out.join(name)).expect("dataset exists");
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y"), "{name} header");
        let mut count = 0;
        for line in lines {
            let (x, y) = line.split_once(',').expect("two columns");
            let x: f64 = x.parse().expect("x parses");
            let y: f64 = y.parse().expect("y parses");
            assert!(x > 0.0 && x < 1.0, "{name}: input {x} outside (0, 1)");
            assert!(y.is_finite());
            count += 1;
        }
        assert_eq!(count, rows, "{name} row count");
    }
}

#[test]
fn the_environment_variable_redirects_output() {
    let dir = scratch("env-override");
    let config_out = dir.join("from_config");
    let env_out = dir.join("from_env");
    let config = write_config(&dir, "run.toml", &small_config("benchmark", &config_out));
    let output = bin()
        .args(["bench", config.to_str().unwrap()])
        .env(OUT_DIR_ENV, &env_out)
        .output()
        .expect("binary runs");
    assert_eq!(
        output.status.code(),
        Some(0),
        "bench failed: {}",
        stderr_of(&output)
    );
    assert!(env_out.join("trials.csv").exists());
    assert!(
        !config_out.exists(),
        "the config's directory must stay untouched when the environment overrides it"
    );
}

#[test]
fn the_out_flag_beats_config_and_environment() {
    let dir = scratch("flag-override");
    let config_out = dir.join("from_config");
    let env_out = dir.join("from_env");
    let flag_out = dir.join("from_flag");
    let config = write_config(&dir, "run.toml", &small_config("benchmark", &config_out));
    let output = bin()
        .args([
            "bench",
            config.to_str().unwrap(),
            "--out",
            flag_out.to_str().unwrap(),
        ])
        .env(OUT_DIR_ENV, &env_out)
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(0));
    assert!(flag_out.join("trials.csv").exists());
    assert!(!config_out.exists());
    assert!(!env_out.exists());
}

#[test]
fn bench_writes_tables_and_prints_the_summary() {
    let dir = scratch("bench-outputs");
    let out = dir.join("out");
    let config = write_config(&dir, "run.toml", &small_config("benchmark", &out));
    let output = bin()
        .args(["bench", config.to_str().unwrap()])
        .output()
        .expect("binary runs");
    assert_eq!(
        output.status.code(),
        Some(0),
        "bench failed: {}",
        stderr_of(&output)
    );
    let printed = stdout_of(&output);
    assert!(printed.contains("rmse"), "summary table missing");
    assert!(printed.contains("wrote "), "written files not reported");

    let trials = fs::read_to_string(out.join("trials.csv")).expect("trials table exists");
    assert_eq!(trials.lines().count(), 3, "header plus one row per trial");
    assert!(out.join("summary.csv").exists());
    let svgs = fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|ext| ext == "svg")
        })
        .count();
    assert_eq!(svgs, 0, "figures need at least two greedy step sizes");
}

#[test]
fn bench_runs_are_reproducible_apart_from_timings() {
    let dir = scratch("determinism");
    let config = write_config(
        &dir,
        "run.toml",
        &small_config("benchmark", &dir.join("unused")),
    );
    let mut tables = Vec::new();
    for run in ["first", "second"] {
        let out = dir.join(run);
        let output = bin()
            .args([
                "bench",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .expect("binary runs");
        assert_eq!(output.status.code(), Some(0));
        let text = fs::read_to_string(out.join("trials.csv")).expect("trials table exists");
        tables.push(strip_timing_column(&text));
    }
    assert_eq!(
        tables[0], tables[1],
        "identical config and seed must reproduce every non-timing byte"
    );
}
