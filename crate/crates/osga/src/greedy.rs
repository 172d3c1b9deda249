//! Orthogonal super greedy fitting and iteration selection.
//!
//! [`osga_fit`] runs the super greedy iteration: pick the `s` atoms whose
//! normalized columns correlate most strongly with the current residual, add
//! them to an incremental orthonormal factorization, and re-project the
//! response onto everything selected so far.  Step size `s = 1` recovers the
//! classical orthogonal greedy algorithm; larger `s` trades per-iteration
//! optimality for fewer (expensive) projection rounds and is sound whenever
//! `s - 1 <= 1/(2M)` for dictionary coherence `M`.
//!
//! Atoms that turn out numerically dependent on the selected span are
//! rejected by the factorization and replaced by the next best candidate
//! within the same iteration, so a fit never stalls on a redundant
//! dictionary.
//!
//! Two data-driven rules choose how many iterations to keep: a complexity
//! penalty on the truncated empirical risk ([`choose_m_l0`]) and validation
//! RMSE on held-out data ([`choose_m_holdout`]).  Both operate on the
//! recorded per-iteration history, so a single fit supports any selector.

use crate::datagen::Dataset;
use crate::dictionary::{self, DesignMatrix};
use crate::empirical;
use crate::error::{Error, Result};
use crate::orthls::OrthoFactor;
use ndarray::Array1;
use std::time::Instant;

/// Configuration for [`osga_fit`].
#[derive(Debug, Clone)]
pub struct GreedyConfig {
    /// Atoms selected per iteration (`s >= 1`).
    pub step_size: usize,
    /// Maximum number of iterations to run.
    pub max_iterations: usize,
    /// Stop once the residual empirical norm falls to or below this.
    pub residual_stop_tol: f64,
    /// If set, refuse to run when `step_size` exceeds what the design's
    /// coherence admits.
    pub enforce_coherence_gate: bool,
    /// Truncation level for the recorded truncated risks; defaults to
    /// `max |y_i|` of the training response.
    pub truncation_level: Option<f64>,
}

impl GreedyConfig {
    /// Step size `s`, iteration budget `m`, defaults elsewhere.
    pub fn new(step_size: usize, max_iterations: usize) -> Self {
        GreedyConfig {
            step_size,
            max_iterations,
            residual_stop_tol: 1e-12,
            enforce_coherence_gate: false,
            truncation_level: None,
        }
    }
}

/// State recorded after each completed iteration.
#[derive(Debug, Clone)]
pub struct IterateRecord {
    /// Coefficients on the accepted atoms (normalized columns), in selection
    /// order; length equals the total number of atoms accepted so far.
    pub coefficients: Vec<f64>,
    /// Empirical norm of the residual `y - f_k`.
    pub residual_norm: f64,
    /// Truncated empirical risk `(1/n) sum (y_i - trunc(f_k(x_i)))^2`.
    pub truncated_risk: f64,
    /// Wall-clock seconds from the start of the fit to the end of this
    /// iteration.
    pub train_seconds: f64,
}

/// Result of a greedy fit: per-iteration atom blocks and history.
#[derive(Debug, Clone)]
pub struct GreedyFit {
    /// Atom indices accepted in each iteration, in selection order.
    pub blocks: Vec<Vec<usize>>,
    /// The orthonormal factorization over all accepted atoms.
    pub factor: OrthoFactor,
    /// One record per completed iteration.
    pub history: Vec<IterateRecord>,
    /// Truncation level used for the recorded truncated risks.
    pub truncation_level: f64,
    /// Step size the fit ran with.
    pub step_size: usize,
}

impl GreedyFit {
    /// Number of completed iterations.
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    /// Atom indices in the model after `iteration` rounds (1-based), in
    /// selection order; aligned with that iteration's coefficient vector.
    pub fn selected_atoms(&self, iteration: usize) -> Result<Vec<usize>> {
        self.check_iteration(iteration)?;
        Ok(self.blocks[..iteration].concat())
    }

    fn check_iteration(&self, iteration: usize) -> Result<()> {
        if iteration == 0 || iteration > self.history.len() {
            return Err(Error::IterationOutOfRange {
                requested: iteration,
                available: self.history.len(),
            });
        }
        Ok(())
    }
}

/// Clamp `value` to `[-level, level]`.
pub fn truncate(value: f64, level: f64) -> f64 {
    debug_assert!(level >= 0.0);
    value.clamp(-level, level)
}

/// Indices of the (up to) `count` non-excluded atoms with the largest
/// absolute empirical correlation to `residual`, ties broken toward smaller
/// indices.
///
/// Returns fewer than `count` indices when fewer candidates remain and
/// [`Error::EmptyCandidateSet`] when none do.
pub fn select_super_atoms(
    residual: &Array1<f64>,
    design: &DesignMatrix,
    excluded: &[bool],
    count: usize,
) -> Result<Vec<usize>> {
    debug_assert_eq!(excluded.len(), design.n_atoms());
    let mut ranked: Vec<(usize, f64)> = Vec::new();
    for (i, col) in design.columns().iter().enumerate() {
        if !excluded[i] {
            ranked.push((i, empirical::dot(col, residual).abs()));
        }
    }
    if ranked.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    // Descending by correlation magnitude; ascending index on ties.  The sort
    // is stable and `ranked` is index-ordered, so ties resolve themselves.
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("correlations are not NaN"));
    ranked.truncate(count);
    Ok(ranked.into_iter().map(|(i, _)| i).collect())
}

/// Run the orthogonal super greedy fit of `dataset` over `design`.
///
/// The design must be evaluated on the dataset's inputs (same sample count).
/// Iterations stop early when the residual reaches the stop tolerance or the
/// dictionary runs out of independent atoms; the returned history always
/// contains at least one iteration for a nonempty dictionary.
pub fn osga_fit(dataset: &Dataset, design: &DesignMatrix, config: &GreedyConfig) -> Result<GreedyFit> {
    let n = dataset.len();
    if design.n_samples() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: design.n_samples(),
        });
    }
    if design.n_atoms() == 0 {
        return Err(Error::EmptyCandidateSet);
    }
    debug_assert!(config.step_size >= 1);
    if config.enforce_coherence_gate {
        let max_admissible = if design.n_atoms() < 2 {
            1
        } else {
            dictionary::coherence(design)?.max_step_size
        };
        if config.step_size > max_admissible {
            return Err(Error::CoherenceGateViolation {
                step_size: config.step_size,
                max_admissible,
            });
        }
    }

    let y = &dataset.targets;
    let mut level = config
        .truncation_level
        .unwrap_or_else(|| y.iter().fold(0.0, |m: f64, &v| m.max(v.abs())));
    if level <= 0.0 || level.is_nan() {
        level = 1.0;
    }

    let start = Instant::now();
    let mut factor = OrthoFactor::new(n);
    let mut excluded = vec![false; design.n_atoms()];
    let mut residual = y.clone();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut history: Vec<IterateRecord> = Vec::new();

    for _ in 0..config.max_iterations {
        // Fill a block of up to `step_size` new atoms, replacing any the
        // factorization rejects as dependent with the next best candidate.
        // The residual does not move until the block is projected, so one
        // ranking per iteration serves both selection and replacement.
        let ranking = match select_super_atoms(&residual, design, &excluded, design.n_atoms()) {
            Ok(r) => r,
            Err(Error::EmptyCandidateSet) => break,
            Err(e) => return Err(e),
        };
        let mut block = Vec::new();
        for candidate in ranking {
            if block.len() == config.step_size {
                break;
            }
            let column = [design.column(candidate).clone()];
            let outcome = factor.append(&column, &[candidate])?;
            excluded[candidate] = true;
            block.extend(outcome.accepted);
        }
        if block.is_empty() {
            break; // every remaining atom is dependent on the span
        }
        blocks.push(block);

        let projection = factor.project(y)?;
        let coefficients = factor.column_coefficients(&projection.basis_coefficients)?;
        let residual_norm = empirical::norm(&projection.residual);
        let truncated_risk = y
            .iter()
            .zip(projection.fitted.iter())
            .map(|(&yi, &fi)| {
                let d = yi - truncate(fi, level);
                d * d
            })
            .sum::<f64>()
            / n as f64;
        residual = projection.residual;
        history.push(IterateRecord {
            coefficients,
            residual_norm,
            truncated_risk,
            train_seconds: start.elapsed().as_secs_f64(),
        });
        if residual_norm <= config.residual_stop_tol {
            break;
        }
    }

    Ok(GreedyFit {
        blocks,
        factor,
        history,
        truncation_level: level,
        step_size: config.step_size,
    })
}

/// Evaluate the model at iterate `iteration` (1-based) on arbitrary points.
///
/// `design` must be the design the fit ran on; its atom functions and scales
/// extend the fitted columns off the training sample.  With `truncated` the
/// prediction is clamped to the fit's truncation level.
pub fn predict(
    fit: &GreedyFit,
    design: &DesignMatrix,
    iteration: usize,
    points: &Array1<f64>,
    truncated: bool,
) -> Result<Array1<f64>> {
    fit.check_iteration(iteration)?;
    let selected = fit.blocks[..iteration].concat();
    let coefficients = &fit.history[iteration - 1].coefficients;
    debug_assert_eq!(selected.len(), coefficients.len());
    let mut out = Array1::zeros(points.len());
    for (&atom, &a) in selected.iter().zip(coefficients) {
        for (o, &x) in out.iter_mut().zip(points.iter()) {
            *o += a * design.eval_normalized_at(atom, x);
        }
    }
    if truncated {
        let level = fit.truncation_level;
        out.mapv_inplace(|v| truncate(v, level));
    }
    Ok(out)
}

/// Pick the iterate minimizing `truncated risk + kappa * m * s * ln(n) / n`.
///
/// Returns the 1-based iteration count; ties go to the smaller model.
pub fn choose_m_l0(fit: &GreedyFit, kappa: f64, step_size: usize, n: usize) -> usize {
    debug_assert!(!fit.history.is_empty());
    let log_n = (n as f64).ln();
    let mut best_m = 1;
    let mut best = f64::INFINITY;
    for (idx, record) in fit.history.iter().enumerate() {
        let m = (idx + 1) as f64;
        let penalized = record.truncated_risk + kappa * m * step_size as f64 * log_n / n as f64;
        if penalized < best {
            best = penalized;
            best_m = idx + 1;
        }
    }
    best_m
}

/// Pick the iterate whose truncated prediction minimizes RMSE on a held-out
/// validation set.  Ties go to the smaller model.
pub fn choose_m_holdout(
    fit: &GreedyFit,
    design: &DesignMatrix,
    validation: &Dataset,
) -> Result<usize> {
    debug_assert!(!fit.history.is_empty());
    if validation.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    // Evaluate each selected atom once on the validation inputs, then replay
    // every iterate's coefficient vector over those columns.
    let all_selected = fit.blocks.concat();
    let atom_values: Vec<Array1<f64>> = all_selected
        .iter()
        .map(|&atom| validation.inputs.mapv(|x| design.eval_normalized_at(atom, x)))
        .collect();
    let mut best_m = 1;
    let mut best = f64::INFINITY;
    for (idx, record) in fit.history.iter().enumerate() {
        let mut pred: Array1<f64> = Array1::zeros(validation.len());
        for (col, &a) in atom_values.iter().zip(record.coefficients.iter()) {
            pred.scaled_add(a, col);
        }
        pred.mapv_inplace(|v| truncate(v, fit.truncation_level));
        let err = &validation.targets - &pred;
        let rmse = empirical::norm_sq(&err).sqrt();
        if rmse < best {
            best = rmse;
            best_m = idx + 1;
        }
    }
    Ok(best_m)
}
