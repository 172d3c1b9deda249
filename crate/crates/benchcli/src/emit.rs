//! Result serialization: CSV tables, their parser (for re-aggregation and
//! round-trip checks), and figure emission.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which
//! round-trips every f64 exactly; an empty run still gets header-only
//! files so downstream tooling always finds a well-formed table.

use crate::runner::{summarize, SummaryRow, SweepTable, TrialResult};
use crate::svg::{error_bar_chart, Series};
use anyhow::{bail, Context};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const TRIALS_HEADER: &str =
    "method,s,dictionary,target,trial,rmse,sparsity,train_seconds,hyperparam";
pub const SUMMARY_HEADER: &str = "method,s,dictionary,target,trials,rmse_mean,rmse_std,\
                                  sparsity_mean,sparsity_std,train_seconds_mean,train_seconds_std";

/// Render trial rows as CSV. Rows are written in the order given; callers
/// sort beforehand (the runner already returns canonical order).
pub fn to_trials_csv(trials: &[TrialResult]) -> String {
    let mut out = String::from(TRIALS_HEADER);
    out.push('\n');
    for t in trials {
        writeln!(
            out,
            "{},{},{},{},{},{:.16e},{},{:.16e},{}",
            t.method,
            t.step_size,
            t.dictionary,
            t.target,
            t.trial,
            t.rmse,
            t.sparsity,
            t.train_seconds,
            t.hyperparam
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Render summary rows as CSV.
pub fn to_summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.method,
            r.step_size,
            r.dictionary,
            r.target,
            r.trial_count,
            r.rmse_mean,
            r.rmse_std,
            r.sparsity_mean,
            r.sparsity_std,
            r.train_seconds_mean,
            r.train_seconds_std
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Parse a `trials.csv` produced by [`to_trials_csv`].
///
/// Fields never contain commas (hyperparameters are `key=value` tokens), so
/// a plain split is exact.
pub fn parse_trials_csv(text: &str) -> anyhow::Result<Vec<TrialResult>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == TRIALS_HEADER => {}
        Some(other) => bail!("unexpected trials.csv header: {other}"),
        None => bail!("empty trials.csv"),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            bail!("row {}: expected 9 fields, got {}", i + 2, fields.len());
        }
        let row = TrialResult {
            method: fields[0].to_string(),
            step_size: fields[1].parse().with_context(|| format!("row {}: s", i + 2))?,
            dictionary: fields[2].to_string(),
            target: fields[3].to_string(),
            trial: fields[4].parse().with_context(|| format!("row {}: trial", i + 2))?,
            rmse: fields[5].parse().with_context(|| format!("row {}: rmse", i + 2))?,
            sparsity: fields[6]
                .parse()
                .with_context(|| format!("row {}: sparsity", i + 2))?,
            train_seconds: fields[7]
                .parse()
                .with_context(|| format!("row {}: train_seconds", i + 2))?,
            hyperparam: fields[8].to_string(),
        };
        out.push(row);
    }
    Ok(out)
}

/// Drop the `train_seconds` column from a trials CSV, preserving everything
/// else byte for byte.  Two runs of the same seeded experiment must agree
/// exactly on the result of this transform; only timings may differ.
pub fn strip_timing_column(csv: &str) -> String {
    let mut out = String::with_capacity(csv.len());
    for line in csv.lines() {
        let fields: Vec<&str> = line.split(',').collect();
        let kept: Vec<&str> = fields
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 7)
            .map(|(_, f)| *f)
            .collect();
        out.push_str(&kept.join(","));
        out.push('\n');
    }
    out
}

/// Re-aggregate parsed trial rows; the result must match the summary the
/// original run produced.
pub fn reaggregate(trials: &[TrialResult]) -> Vec<SummaryRow> {
    summarize(trials)
}

/// Write `trials.csv`, `summary.csv`, and (optionally) figures into
/// `out_dir`.  Returns the paths written.
pub fn write_outputs(
    out_dir: &Path,
    table: &SweepTable,
    emit_figures: bool,
    label: &str,
) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let mut written = Vec::new();

    let trials_path = out_dir.join("trials.csv");
    std::fs::write(&trials_path, to_trials_csv(&table.trials))
        .with_context(|| format!("writing {}", trials_path.display()))?;
    written.push(trials_path);

    let summary_path = out_dir.join("summary.csv");
    std::fs::write(&summary_path, to_summary_csv(&table.summary))
        .with_context(|| format!("writing {}", summary_path.display()))?;
    written.push(summary_path);

    if emit_figures {
        for (name, svg) in figures(&table.summary, label) {
            let path = out_dir.join(name);
            std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Step-size figures: for each (target, dictionary) pair with at least two
/// greedy step sizes in the summary, one chart per metric showing mean and
/// standard deviation against the step size.  Non-greedy rows and groups
/// with a single step size produce nothing.
pub fn figures(summary: &[SummaryRow], label: &str) -> Vec<(String, String)> {
    let greedy: Vec<&SummaryRow> = summary
        .iter()
        .filter(|r| r.method == "osga" && r.step_size > 0)
        .collect();
    // (target, dictionary) pairs in first-seen order.
    let mut groups: Vec<(String, String)> = Vec::new();
    for row in &greedy {
        let key = (row.target.clone(), row.dictionary.clone());
        if !groups.contains(&key) {
            groups.push(key);
        }
    }

    type MetricAccessor = fn(&SummaryRow) -> (f64, f64);
    let metrics: [(&str, &str, MetricAccessor); 3] = [
        ("rmse", "test RMSE", |r| (r.rmse_mean, r.rmse_std)),
        ("train_seconds", "training seconds", |r| {
            (r.train_seconds_mean, r.train_seconds_std)
        }),
        ("sparsity", "atoms in model", |r| {
            (r.sparsity_mean, r.sparsity_std)
        }),
    ];

    let mut out = Vec::new();
    for (target, dictionary) in groups {
        let mut rows: Vec<&&SummaryRow> = greedy
            .iter()
            .filter(|r| r.target == target && r.dictionary == dictionary)
            .collect();
        rows.sort_by_key(|r| r.step_size);
        if rows.len() < 2 {
            continue;
        }
        for (metric, axis, extract) in metrics {
            let points: Vec<(f64, f64, f64)> = rows
                .iter()
                .map(|r| {
                    let (mean, std) = extract(r);
                    (r.step_size as f64, mean, std)
                })
                .collect();
            let series = [Series {
                label: format!("{dictionary}/{target}"),
                points,
            }];
            let title = format!("{label}: {axis} vs step size ({dictionary}, {target})");
            let svg = error_bar_chart(&title, "step size", axis, &series);
            out.push((format!("fig_{metric}_{target}_{dictionary}.svg"), svg));
        }
    }
    out
}
