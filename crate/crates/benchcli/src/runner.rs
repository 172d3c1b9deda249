//! Trial orchestration: sample data, build the dictionary, fit every
//! configured method, select hyperparameters, and aggregate across trials.
//!
//! Each trial draws its own training and test sets from seeds mixed out of
//! `base_seed` and the trial index, so runs are reproducible and trials are
//! independent.  Trials run in parallel; the methods within a trial run
//! sequentially so their timings are not polluted by each other.
//!
//! Hyperparameter selection: the greedy methods honor every selector rule;
//! the baselines pick their penalty (or boosting iterate) on the holdout
//! split under the `holdout` rule and on the noise-free test set otherwise.

use crate::config::{
    DictionaryConfig, DictionaryKind, ExperimentConfig, MethodConfig, MethodKind, SelectorRule,
};
use crate::metrics;
use anyhow::{ensure, Context};
use ndarray::Array1;
use osga::baselines::{
    ista_fit, l2boost_fit, lambda_grid, ridge_sweep, BaselineConfig, BaselineMethod,
};
use osga::datagen::{sample_test, sample_train, Dataset, TargetFunction};
use osga::dictionary::{build_grd, build_tpd, eval_normalized_design, AtomSpec, DesignMatrix};
use osga::greedy::{choose_m_holdout, choose_m_l0, osga_fit, truncate, GreedyConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Greedy iteration budget when the config does not set one.
pub const DEFAULT_GREEDY_BUDGET: usize = 50;
/// ISTA iteration budget when the config does not set one.
pub const DEFAULT_ISTA_BUDGET: usize = 1000;
/// ISTA convergence tolerance when the config does not set one.
pub const DEFAULT_ISTA_TOL: f64 = 1e-8;
/// Boosting iteration budget when the config does not set one.
pub const DEFAULT_BOOST_BUDGET: usize = 10_000;

// Sub-seed streams hung off each trial's seed.
const TRAIN_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;
const CENTER_STREAM: u64 = 3;

/// Mix two words into a well-scrambled seed (splitmix64 finalizer).
///
/// Used to derive independent per-trial and per-purpose RNG seeds from the
/// single `base_seed` in the config.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a.wrapping_add(b.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial number `trial` of a run.
pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    mix_seed(base_seed, trial as u64)
}

/// One (method, dictionary, trial) outcome; a row of `trials.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub method: String,
    /// Atoms per greedy iteration; 0 for the non-greedy baselines.
    pub step_size: usize,
    pub dictionary: String,
    pub target: String,
    pub trial: usize,
    /// Test RMSE at the selected hyperparameter.
    pub rmse: f64,
    /// Number of atoms with a coefficient above the sparsity tolerance.
    pub sparsity: usize,
    /// Training time charged to the selected model, in seconds.
    pub train_seconds: f64,
    /// The selected hyperparameter, e.g. `m=25` or `lambda=0.5`.
    pub hyperparam: String,
}

/// Per-group means and standard deviations; a row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub step_size: usize,
    pub dictionary: String,
    pub target: String,
    pub trial_count: usize,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub sparsity_mean: f64,
    pub sparsity_std: f64,
    pub train_seconds_mean: f64,
    pub train_seconds_std: f64,
}

/// Everything a benchmark run produces before it is written to disk.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub trials: Vec<TrialResult>,
    pub summary: Vec<SummaryRow>,
}

/// Run every (dictionary, trial, method) combination in the config.
///
/// Trials are parallel; the returned rows are sorted by
/// (method, step size, dictionary, trial) regardless of completion order.
pub fn run_experiment(config: &ExperimentConfig) -> anyhow::Result<SweepTable> {
    let target = target_function(config);
    let mut trials = Vec::new();
    for dict_cfg in &config.dictionaries {
        let batches: Vec<Vec<TrialResult>> = (0..config.trial_count)
            .into_par_iter()
            .map(|trial| {
                run_trial_with_target(config, dict_cfg, trial, &target).with_context(|| {
                    format!("trial {trial} on dictionary {}", dict_cfg.kind.label())
                })
            })
            .collect::<anyhow::Result<_>>()?;
        trials.extend(batches.into_iter().flatten());
    }
    sort_trials(&mut trials);
    let summary = summarize(&trials);
    Ok(SweepTable { trials, summary })
}

/// Run one trial of the config's own target. Returns one row per method.
pub fn run_trial(
    config: &ExperimentConfig,
    dict_cfg: &DictionaryConfig,
    trial: usize,
) -> anyhow::Result<Vec<TrialResult>> {
    run_trial_with_target(config, dict_cfg, trial, &target_function(config))
}

/// The built-in target named by the config.
pub fn target_function(config: &ExperimentConfig) -> TargetFunction {
    match config.target {
        crate::config::TargetKind::F1 => TargetFunction::F1,
        crate::config::TargetKind::F2 => TargetFunction::F2,
    }
}

/// The (train, test) pair trial number `trial` of this config sees.
pub fn trial_datasets(
    config: &ExperimentConfig,
    target: &TargetFunction,
    trial: usize,
) -> anyhow::Result<(Dataset, Dataset)> {
    let seed = trial_seed(config.base_seed, trial);
    let train = sample_train(
        target,
        config.train_size,
        config.noise_stddev(),
        mix_seed(seed, TRAIN_STREAM),
    )?;
    let test = sample_test(target, config.test_size, mix_seed(seed, TEST_STREAM))?;
    Ok((train, test))
}

/// Run one trial against an explicit target function.
///
/// The target label in the rows still comes from the config; passing a
/// custom function is for tests that need a target with known structure.
pub fn run_trial_with_target(
    config: &ExperimentConfig,
    dict_cfg: &DictionaryConfig,
    trial: usize,
    target: &TargetFunction,
) -> anyhow::Result<Vec<TrialResult>> {
    let seed = trial_seed(config.base_seed, trial);
    let (train, test) = trial_datasets(config, target, trial)?;

    // Under the holdout rule the tail of the training sample is set aside
    // for validation and the model never sees it.
    let (fit_data, validation) = if config.selector.rule == SelectorRule::Holdout {
        let cut = ((1.0 - config.selector.holdout_fraction) * train.len() as f64).floor() as usize;
        let cut = cut.clamp(1, train.len() - 1);
        (train.slice(0, cut), Some(train.slice(cut, train.len())))
    } else {
        (train, None)
    };

    let atoms = build_atoms(dict_cfg, seed);
    let design = eval_normalized_design(&atoms, &fit_data.inputs)?;

    // The dense baselines score every atom on the evaluation points; the
    // greedy fits only score their selected atoms, so this is built lazily.
    let needs_dense = config
        .methods
        .iter()
        .any(|m| m.kind != MethodKind::Osga);
    let dense_test_columns = needs_dense.then(|| design.eval_columns_at(&test.inputs));
    let dense_validation_columns = match (&validation, needs_dense) {
        (Some(v), true) => Some(design.eval_columns_at(&v.inputs)),
        _ => None,
    };

    let mut rows = Vec::with_capacity(config.methods.len());
    for method in &config.methods {
        let outcome = match method.kind {
            MethodKind::Osga => fit_greedy(
                config,
                method,
                &design,
                &fit_data,
                validation.as_ref(),
                &test,
            )?,
            MethodKind::Ridge | MethodKind::Lasso | MethodKind::Half | MethodKind::L2boost => {
                fit_baseline(
                    config,
                    method,
                    &design,
                    &fit_data,
                    validation.as_ref(),
                    &test,
                    dense_test_columns.as_deref().expect("dense columns exist"),
                    dense_validation_columns.as_deref(),
                )?
            }
        };
        rows.push(TrialResult {
            method: method.kind.label().to_string(),
            step_size: outcome.step_size,
            dictionary: dict_cfg.kind.label().to_string(),
            target: config.target.label().to_string(),
            trial,
            rmse: outcome.rmse,
            sparsity: outcome.sparsity,
            train_seconds: outcome.train_seconds,
            hyperparam: outcome.hyperparam,
        });
    }
    Ok(rows)
}

/// Instantiate a dictionary config for one trial.
fn build_atoms(dict_cfg: &DictionaryConfig, trial_seed: u64) -> Vec<AtomSpec> {
    match dict_cfg.kind {
        DictionaryKind::Tpd => build_tpd(dict_cfg.size),
        DictionaryKind::Grd => {
            let seed = dict_cfg
                .center_seed
                .unwrap_or_else(|| mix_seed(trial_seed, CENTER_STREAM));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let centers: Vec<f64> = (0..dict_cfg.size).map(|_| rng.random()).collect();
            let shape = dict_cfg.shape.expect("validated: grd has a shape");
            build_grd(&centers, shape)
        }
    }
}

/// What one method produced in one trial, before labeling.
struct MethodOutcome {
    step_size: usize,
    rmse: f64,
    sparsity: usize,
    train_seconds: f64,
    hyperparam: String,
}

fn fit_greedy(
    config: &ExperimentConfig,
    method: &MethodConfig,
    design: &DesignMatrix,
    fit_data: &Dataset,
    validation: Option<&Dataset>,
    test: &Dataset,
) -> anyhow::Result<MethodOutcome> {
    let s = method.step_size.unwrap_or(1);
    let m_max = method.max_iterations.unwrap_or(DEFAULT_GREEDY_BUDGET);
    let greedy = GreedyConfig::new(s, m_max);
    let fit = osga_fit(fit_data, design, &greedy)?;
    ensure!(fit.iterations() >= 1, "greedy fit produced no iterations");

    // Score each selected atom once on the test inputs; every iterate's
    // prediction is then a short weighted sum of those columns.
    let selected = fit.blocks.concat();
    let test_columns: Vec<Array1<f64>> = selected
        .iter()
        .map(|&atom| test.inputs.mapv(|x| design.eval_normalized_at(atom, x)))
        .collect();
    let clamp = config.selector.truncate.then_some(fit.truncation_level);
    let rmse_at = |m: usize| -> anyhow::Result<f64> {
        let coefficients = &fit.history[m - 1].coefficients;
        let mut pred: Array1<f64> = Array1::zeros(test.len());
        for (column, &a) in test_columns.iter().zip(coefficients) {
            pred.scaled_add(a, column);
        }
        if let Some(level) = clamp {
            pred.mapv_inplace(|v| truncate(v, level));
        }
        Ok(metrics::rmse(
            pred.as_slice().expect("contiguous"),
            test.targets.as_slice().expect("contiguous"),
        )?)
    };

    let m_star = match config.selector.rule {
        SelectorRule::TestMin => {
            let mut best_m = 1;
            let mut best = f64::INFINITY;
            for m in 1..=fit.iterations() {
                let r = rmse_at(m)?;
                if r < best {
                    best = r;
                    best_m = m;
                }
            }
            best_m
        }
        SelectorRule::L0Penalty => choose_m_l0(&fit, config.selector.kappa, s, fit_data.len()),
        SelectorRule::Holdout => {
            let validation = validation.expect("holdout rule implies a validation split");
            choose_m_holdout(&fit, design, validation)?
        }
        SelectorRule::Fixed => fit.iterations(),
    };

    Ok(MethodOutcome {
        step_size: s,
        rmse: rmse_at(m_star)?,
        sparsity: metrics::sparsity(&fit.history[m_star - 1].coefficients),
        train_seconds: fit.history[m_star - 1].train_seconds,
        hyperparam: format!("m={m_star}"),
    })
}

#[allow(clippy::too_many_arguments)]
fn fit_baseline(
    config: &ExperimentConfig,
    method: &MethodConfig,
    design: &DesignMatrix,
    fit_data: &Dataset,
    validation: Option<&Dataset>,
    test: &Dataset,
    test_columns: &[Array1<f64>],
    validation_columns: Option<&[Array1<f64>]>,
) -> anyhow::Result<MethodOutcome> {
    // Baselines are truncated at the same level a greedy fit would use.
    let clamp = config
        .selector
        .truncate
        .then(|| truncation_level(&fit_data.targets));
    let select_on_validation =
        config.selector.rule == SelectorRule::Holdout && validation.is_some();
    let (select_columns, select_targets): (&[Array1<f64>], &Array1<f64>) = if select_on_validation
    {
        (
            validation_columns.expect("holdout rule implies validation columns"),
            &validation.expect("checked above").targets,
        )
    } else {
        (test_columns, &test.targets)
    };

    match method.kind {
        MethodKind::Ridge => {
            let lambdas = method.lambdas.clone().unwrap_or_else(lambda_grid);
            let models = ridge_sweep(design, &fit_data.targets, &lambdas)?;
            let mut best_idx = 0;
            let mut best = f64::INFINITY;
            for (idx, model) in models.iter().enumerate() {
                let score = dense_rmse(&model.coefficients, select_columns, select_targets, clamp)?;
                if score < best {
                    best = score;
                    best_idx = idx;
                }
            }
            let model = &models[best_idx];
            Ok(MethodOutcome {
                step_size: 0,
                rmse: dense_rmse(&model.coefficients, test_columns, &test.targets, clamp)?,
                sparsity: metrics::sparsity(&model.coefficients),
                train_seconds: model.train_seconds,
                hyperparam: format!("lambda={}", lambdas[best_idx]),
            })
        }
        MethodKind::Lasso | MethodKind::Half => {
            let baseline_method = if method.kind == MethodKind::Lasso {
                BaselineMethod::LassoIsta
            } else {
                BaselineMethod::HalfIsta
            };
            let lambdas = method.lambdas.clone().unwrap_or_else(lambda_grid);
            let mut best: Option<(f64, usize, osga::baselines::BaselineModel)> = None;
            for (idx, &lambda) in lambdas.iter().enumerate() {
                let mut baseline = BaselineConfig::new(baseline_method, lambda);
                baseline.max_iterations = method.max_iterations.unwrap_or(DEFAULT_ISTA_BUDGET);
                baseline.convergence_tol = method.convergence_tol.unwrap_or(DEFAULT_ISTA_TOL);
                baseline.step_nu = method.step_nu;
                let model = ista_fit(design, &fit_data.targets, &baseline)?;
                let score = dense_rmse(&model.coefficients, select_columns, select_targets, clamp)?;
                if best.as_ref().is_none_or(|(b, _, _)| score < *b) {
                    best = Some((score, idx, model));
                }
            }
            let (_, best_idx, model) = best.expect("lambdas is nonempty (validated)");
            Ok(MethodOutcome {
                step_size: 0,
                rmse: dense_rmse(&model.coefficients, test_columns, &test.targets, clamp)?,
                sparsity: metrics::sparsity(&model.coefficients),
                train_seconds: model.train_seconds,
                hyperparam: format!("lambda={}", lambdas[best_idx]),
            })
        }
        MethodKind::L2boost => {
            let mut baseline = BaselineConfig::new(BaselineMethod::L2Boost, 0.0);
            baseline.max_iterations = method.max_iterations.unwrap_or(DEFAULT_BOOST_BUDGET);
            baseline.step_nu = method.step_nu;
            let model = l2boost_fit(design, &fit_data.targets, &baseline)?;
            let t_star = match config.selector.rule {
                SelectorRule::Fixed => model.steps.len(),
                _ => boost_best_iteration(&model.steps, select_columns, select_targets, clamp)?,
            };
            // Replay the first t* steps to recover that iterate's
            // coefficients; the fitted model only stores the final ones.
            let mut coefficients = vec![0.0; design.n_atoms()];
            for &(atom, delta) in &model.steps[..t_star] {
                coefficients[atom] += delta;
            }
            let train_seconds = if t_star == 0 {
                model.train_seconds
            } else {
                model.iteration_seconds[t_star - 1]
            };
            Ok(MethodOutcome {
                step_size: 0,
                rmse: dense_rmse(&coefficients, test_columns, &test.targets, clamp)?,
                sparsity: metrics::sparsity(&coefficients),
                train_seconds,
                hyperparam: format!("iters={t_star}"),
            })
        }
        MethodKind::Osga => unreachable!("greedy fits are dispatched separately"),
    }
}

/// Truncation level convention shared with the greedy fits: the largest
/// absolute response, or 1 when the response is identically zero.
fn truncation_level(targets: &Array1<f64>) -> f64 {
    let max_abs = targets.iter().fold(0.0f64, |acc, &y| acc.max(y.abs()));
    if max_abs > 0.0 {
        max_abs
    } else {
        1.0
    }
}

/// RMSE of a dense coefficient vector against `targets`, scored on
/// pre-evaluated atom columns, optionally clamping the prediction.
fn dense_rmse(
    coefficients: &[f64],
    columns: &[Array1<f64>],
    targets: &Array1<f64>,
    clamp: Option<f64>,
) -> anyhow::Result<f64> {
    let mut pred: Array1<f64> = Array1::zeros(targets.len());
    for (column, &a) in columns.iter().zip(coefficients) {
        if a != 0.0 {
            pred.scaled_add(a, column);
        }
    }
    if let Some(level) = clamp {
        pred.mapv_inplace(|v| truncate(v, level));
    }
    Ok(metrics::rmse(
        pred.as_slice().expect("contiguous"),
        targets.as_slice().expect("contiguous"),
    )?)
}

/// The boosting iterate (1-based) with the lowest RMSE on the given points,
/// found by replaying the update path.  Returns 0 when there are no steps.
fn boost_best_iteration(
    steps: &[(usize, f64)],
    columns: &[Array1<f64>],
    targets: &Array1<f64>,
    clamp: Option<f64>,
) -> anyhow::Result<usize> {
    let mut pred: Array1<f64> = Array1::zeros(targets.len());
    let mut best_t = 0;
    let mut best = metrics::rmse(
        pred.as_slice().expect("contiguous"),
        targets.as_slice().expect("contiguous"),
    )?;
    let mut clamped = pred.clone();
    for (idx, &(atom, delta)) in steps.iter().enumerate() {
        pred.scaled_add(delta, &columns[atom]);
        let score = match clamp {
            Some(level) => {
                clamped.assign(&pred);
                clamped.mapv_inplace(|v| truncate(v, level));
                metrics::rmse(
                    clamped.as_slice().expect("contiguous"),
                    targets.as_slice().expect("contiguous"),
                )?
            }
            None => metrics::rmse(
                pred.as_slice().expect("contiguous"),
                targets.as_slice().expect("contiguous"),
            )?,
        };
        if score < best {
            best = score;
            best_t = idx + 1;
        }
    }
    Ok(best_t)
}

/// Sort rows into the canonical output order:
/// (method, step size, dictionary, target, trial).
pub fn sort_trials(trials: &mut [TrialResult]) {
    trials.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.step_size.cmp(&b.step_size))
            .then(a.dictionary.cmp(&b.dictionary))
            .then(a.target.cmp(&b.target))
            .then(a.trial.cmp(&b.trial))
    });
}

/// Aggregate trial rows into per-(method, step size, dictionary, target)
/// means and population standard deviations.
///
/// Rows in each group are summed in trial order, so the result does not
/// depend on the order the trials arrive in.
pub fn summarize(trials: &[TrialResult]) -> Vec<SummaryRow> {
    use std::collections::BTreeMap;
    type Key = (String, usize, String, String);
    let mut groups: BTreeMap<Key, Vec<&TrialResult>> = BTreeMap::new();
    for row in trials {
        let key = (
            row.method.clone(),
            row.step_size,
            row.dictionary.clone(),
            row.target.clone(),
        );
        groups.entry(key).or_default().push(row);
    }
    groups
        .into_iter()
        .map(|((method, step_size, dictionary, target), mut rows)| {
            rows.sort_by_key(|r| r.trial);
            let rmse: Vec<f64> = rows.iter().map(|r| r.rmse).collect();
            let sparsity: Vec<f64> = rows.iter().map(|r| r.sparsity as f64).collect();
            let seconds: Vec<f64> = rows.iter().map(|r| r.train_seconds).collect();
            let (rmse_mean, rmse_std) = mean_std(&rmse);
            let (sparsity_mean, sparsity_std) = mean_std(&sparsity);
            let (train_seconds_mean, train_seconds_std) = mean_std(&seconds);
            SummaryRow {
                method,
                step_size,
                dictionary,
                target,
                trial_count: rows.len(),
                rmse_mean,
                rmse_std,
                sparsity_mean,
                sparsity_std,
                train_seconds_mean,
                train_seconds_std,
            }
        })
        .collect()
}

/// Mean and population standard deviation; a single value has deviation 0.
fn mean_std(values: &[f64]) -> (f64, f64) {
    debug_assert!(!values.is_empty());
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / n).max(0.0).sqrt())
}
