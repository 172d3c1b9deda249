//! Penalized regression baselines: ridge, ISTA with soft or half
//! thresholding, and L2 boosting.
//!
//! All methods operate on the same normalized [`DesignMatrix`] and empirical
//! inner product as the greedy fit, so their coefficient vectors and
//! objectives are directly comparable.  The objectives are
//!
//! * ridge: `0.5 ||y - Ga||_n^2 + 0.5 lambda ||a||_2^2`, solved exactly via
//!   the normal equations and a Cholesky factorization;
//! * lasso: `0.5 ||y - Ga||_n^2 + lambda sum |a_i|`, minimized by ISTA with
//!   the soft-thresholding proximal map;
//! * half penalty: `0.5 ||y - Ga||_n^2 + lambda sum sqrt(|a_i|)`, minimized
//!   by ISTA with the exact proximal map of `t sqrt(|u|)`;
//! * boosting: repeated one-atom corrections `nu <r, g_j> g_j` toward the
//!   residual, with a small fixed shrinkage `nu`.
//!
//! ISTA's default step is `0.99 / L` where `L` is the spectral norm of the
//! empirical Gram matrix (estimated by power iteration), which guarantees the
//! objective never increases.

use crate::dictionary::DesignMatrix;
use crate::empirical;
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use std::time::Instant;

/// Which baseline a [`BaselineConfig`] drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    Ridge,
    LassoIsta,
    HalfIsta,
    L2Boost,
}

/// Shared configuration for the iterative baselines.
#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    /// Penalty weight (ignored by boosting).
    pub lambda: f64,
    /// Step size; `None` selects `0.99 / L` for ISTA and `0.0005` for
    /// boosting.
    pub step_nu: Option<f64>,
    pub max_iterations: usize,
    /// ISTA stops when the largest coefficient change falls to or below
    /// this; boosting ignores it and runs its full budget.
    pub convergence_tol: f64,
}

impl BaselineConfig {
    pub fn new(method: BaselineMethod, lambda: f64) -> Self {
        BaselineConfig {
            method,
            lambda,
            step_nu: None,
            max_iterations: 10_000,
            convergence_tol: 1e-10,
        }
    }
}

/// A fitted baseline: coefficients on the normalized atoms plus the
/// per-iteration trail needed to audit or replay the fit.
#[derive(Debug, Clone)]
pub struct BaselineModel {
    pub coefficients: Vec<f64>,
    /// Objective value after each iteration (a single entry for ridge).
    pub objective_history: Vec<f64>,
    /// Boosting's per-iteration updates `(atom, coefficient increment)`;
    /// empty for the other methods.
    pub steps: Vec<(usize, f64)>,
    /// Cumulative wall-clock seconds after each iteration (empty for ridge).
    pub iteration_seconds: Vec<f64>,
    /// Total wall-clock seconds spent fitting.
    pub train_seconds: f64,
    pub config: BaselineConfig,
}

impl BaselineModel {
    /// Prediction on the design's own sample points.
    pub fn fitted(&self, design: &DesignMatrix) -> Array1<f64> {
        let mut out = Array1::zeros(design.n_samples());
        for (i, &a) in self.coefficients.iter().enumerate() {
            if a != 0.0 {
                out.scaled_add(a, design.column(i));
            }
        }
        out
    }
}

/// The penalty grid `2^-10, 2^-9, .., 2^10` used by the experiment sweeps.
pub fn lambda_grid() -> Vec<f64> {
    (-10..=10).map(|k| 2.0_f64.powi(k)).collect()
}

/// Soft thresholding `sign(x) max(|x| - t, 0)`: the proximal map of `t |u|`.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Exact proximal map of `t sqrt(|u|)`: the minimizer of
/// `(u - x)^2 / 2 + t sqrt(|u|)`.
///
/// The objective restricted to `u >= 0` (for `x >= 0`; the map is odd) has a
/// derivative that falls from `+inf` to a single minimum at
/// `u_c = (t/4)^(2/3)` and rises again, so any interior stationary minimum
/// lies in `[u_c, x + t]` and bisection on the derivative finds it.  The
/// result is that stationary point or zero, whichever has the smaller
/// objective; exact ties go to zero.
pub fn half_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if t == 0.0 {
        return x;
    }
    let ax = x.abs();
    if ax == 0.0 {
        return 0.0;
    }
    let u_c = (t / 4.0).powf(2.0 / 3.0);
    let phi_prime = |u: f64| u - ax + t / (2.0 * u.sqrt());
    if phi_prime(u_c) >= 0.0 {
        // Derivative never goes negative: objective increases away from 0.
        return 0.0;
    }
    let (mut lo, mut hi) = (u_c, ax + t);
    debug_assert!(phi_prime(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi_prime(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    let u = 0.5 * (lo + hi);
    let phi = |u: f64| 0.5 * (u - ax).powi(2) + t * u.sqrt();
    if phi(u) < 0.5 * ax * ax {
        u * x.signum()
    } else {
        0.0
    }
}

/// Empirical Gram matrix `(1/n) X^T X` of the normalized columns.
fn empirical_gram(design: &DesignMatrix) -> Array2<f64> {
    let m = design.n_atoms();
    let mut g = Array2::zeros((m, m));
    for i in 0..m {
        for j in i..m {
            let v = empirical::dot(design.column(i), design.column(j));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Spectral norm of the empirical Gram matrix by power iteration.
///
/// Deterministic start vector; relative tolerance 1e-6.  For unit-norm
/// columns the result is at least 1, so the relative test is well scaled.
fn gram_spectral_norm(design: &DesignMatrix) -> f64 {
    let m = design.n_atoms();
    let n = design.n_samples();
    let mut v = Array1::from_shape_fn(m, |i| 1.0 + 1e-3 * (i % 7) as f64);
    let vnorm = v.dot(&v).sqrt();
    v.mapv_inplace(|x| x / vnorm);
    let mut estimate = 0.0;
    for _ in 0..10_000 {
        // w = (1/n) X^T (X v) without forming the Gram.
        let mut xv = Array1::zeros(n);
        for (i, col) in design.columns().iter().enumerate() {
            if v[i] != 0.0 {
                xv.scaled_add(v[i], col);
            }
        }
        let w = Array1::from_vec(design.correlations(&xv));
        let new_estimate = v.dot(&w);
        let wnorm = w.dot(&w).sqrt();
        if wnorm == 0.0 {
            return 0.0;
        }
        v = w.mapv(|x| x / wnorm);
        if (new_estimate - estimate).abs() <= 1e-6 * new_estimate.abs() {
            return new_estimate;
        }
        estimate = new_estimate;
    }
    estimate
}

/// Solve `A x = b` for symmetric positive definite `A` by Cholesky
/// factorization.  `A` is consumed as workspace.
fn cholesky_solve(mut a: Array2<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let m = a.nrows();
    debug_assert_eq!(b.len(), m);
    let diag_max = (0..m).fold(0.0_f64, |acc, i| acc.max(a[(i, i)].abs()));
    let tiny = 1e-14 * diag_max.max(f64::MIN_POSITIVE);
    // Lower-triangular factor built in place.
    for j in 0..m {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= a[(j, k)] * a[(j, k)];
        }
        if d <= tiny {
            return Err(Error::SingularSystem);
        }
        let ljj = d.sqrt();
        a[(j, j)] = ljj;
        for i in (j + 1)..m {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = v / ljj;
        }
    }
    // Forward solve L z = b, then back solve L^T x = z.
    let mut x = b.to_vec();
    for i in 0..m {
        for k in 0..i {
            x[i] -= a[(i, k)] * x[k];
        }
        x[i] /= a[(i, i)];
    }
    for i in (0..m).rev() {
        for k in (i + 1)..m {
            x[i] -= a[(k, i)] * x[k];
        }
        x[i] /= a[(i, i)];
    }
    Ok(x)
}

/// Exact ridge solutions for several penalty weights, sharing one Gram
/// matrix.  Each model's `train_seconds` charges the full cost it would have
/// paid alone (Gram plus its own solve).
pub fn ridge_sweep(
    design: &DesignMatrix,
    y: &Array1<f64>,
    lambdas: &[f64],
) -> Result<Vec<BaselineModel>> {
    if y.len() != design.n_samples() {
        return Err(Error::DimensionMismatch {
            expected: design.n_samples(),
            got: y.len(),
        });
    }
    let gram_start = Instant::now();
    let gram = empirical_gram(design);
    let rhs = design.correlations(y);
    let gram_seconds = gram_start.elapsed().as_secs_f64();

    let mut models = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let solve_start = Instant::now();
        let mut system = gram.clone();
        for i in 0..system.nrows() {
            system[(i, i)] += lambda;
        }
        let coefficients = cholesky_solve(system, &rhs)?;
        let train_seconds = gram_seconds + solve_start.elapsed().as_secs_f64();
        let mut model = BaselineModel {
            coefficients,
            objective_history: Vec::new(),
            steps: Vec::new(),
            iteration_seconds: Vec::new(),
            train_seconds,
            config: BaselineConfig {
                method: BaselineMethod::Ridge,
                lambda,
                step_nu: None,
                max_iterations: 1,
                convergence_tol: 0.0,
            },
        };
        let resid = y - &model.fitted(design);
        let l2: f64 = model.coefficients.iter().map(|a| a * a).sum();
        model.objective_history = vec![0.5 * empirical::norm_sq(&resid) + 0.5 * lambda * l2];
        models.push(model);
    }
    Ok(models)
}

/// Exact ridge solution `((1/n) X^T X + lambda I) a = (1/n) X^T y`.
pub fn ridge_fit(design: &DesignMatrix, y: &Array1<f64>, lambda: f64) -> Result<BaselineModel> {
    Ok(ridge_sweep(design, y, &[lambda])?.pop().expect("one lambda in, one model out"))
}

/// ISTA for the lasso or half penalty, depending on `config.method`.
///
/// Starts from zero coefficients; each iteration takes a gradient step on
/// the smooth half of the objective and applies the penalty's proximal map
/// coordinate-wise.  The recorded objective never increases when the step
/// satisfies `nu <= 1/L` (the default).
///
/// # Panics
///
/// If `config.method` is not `LassoIsta` or `HalfIsta`.
pub fn ista_fit(design: &DesignMatrix, y: &Array1<f64>, config: &BaselineConfig) -> Result<BaselineModel> {
    let threshold: fn(f64, f64) -> f64 = match config.method {
        BaselineMethod::LassoIsta => soft_threshold,
        BaselineMethod::HalfIsta => half_threshold,
        other => panic!("ista_fit requires a thresholding method, got {other:?}"),
    };
    let n = design.n_samples();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let m = design.n_atoms();
    let start = Instant::now();
    let nu = config
        .step_nu
        .unwrap_or_else(|| 0.99 / gram_spectral_norm(design));
    let lambda = config.lambda;
    let penalty = |a: &[f64]| -> f64 {
        match config.method {
            BaselineMethod::LassoIsta => a.iter().map(|v| v.abs()).sum(),
            BaselineMethod::HalfIsta => a.iter().map(|v| v.abs().sqrt()).sum(),
            _ => unreachable!(),
        }
    };

    let mut a = vec![0.0; m];
    let mut fitted: Array1<f64> = Array1::zeros(n);
    let mut objective_history = Vec::new();
    let mut iteration_seconds = Vec::new();
    for _ in 0..config.max_iterations {
        let residual = y - &fitted;
        let corr = design.correlations(&residual);
        let mut max_change = 0.0_f64;
        for i in 0..m {
            let z = a[i] + nu * corr[i];
            let new = threshold(z, nu * lambda);
            let change = new - a[i];
            if change != 0.0 {
                fitted.scaled_add(change, design.column(i));
                max_change = max_change.max(change.abs());
                a[i] = new;
            }
        }
        let residual = y - &fitted;
        objective_history.push(0.5 * empirical::norm_sq(&residual) + lambda * penalty(&a));
        iteration_seconds.push(start.elapsed().as_secs_f64());
        if max_change <= config.convergence_tol {
            break;
        }
    }
    Ok(BaselineModel {
        coefficients: a,
        objective_history,
        steps: Vec::new(),
        train_seconds: start.elapsed().as_secs_f64(),
        iteration_seconds,
        config: config.clone(),
    })
}

/// L2 boosting: repeatedly add `nu <r, g_j> g_j` for the atom most
/// correlated with the residual (ties to the smaller index).
///
/// Runs the full iteration budget unless the residual correlation vanishes
/// exactly.  The recorded objective is the squared residual empirical norm;
/// `steps` holds each iteration's `(atom, coefficient increment)` so callers
/// can replay the coefficient path.
pub fn l2boost_fit(design: &DesignMatrix, y: &Array1<f64>, config: &BaselineConfig) -> Result<BaselineModel> {
    let n = design.n_samples();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let start = Instant::now();
    let nu = config.step_nu.unwrap_or(0.0005);
    let mut a = vec![0.0; design.n_atoms()];
    let mut residual = y.clone();
    let mut objective_history = Vec::new();
    let mut steps = Vec::new();
    let mut iteration_seconds = Vec::new();
    for _ in 0..config.max_iterations {
        let corr = design.correlations(&residual);
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (i, &c) in corr.iter().enumerate() {
            if c.abs() > best_abs {
                best_abs = c.abs();
                best = i;
            }
        }
        if best_abs == 0.0 {
            break;
        }
        let delta = nu * corr[best];
        a[best] += delta;
        residual.scaled_add(-delta, design.column(best));
        objective_history.push(empirical::norm_sq(&residual));
        steps.push((best, delta));
        iteration_seconds.push(start.elapsed().as_secs_f64());
    }
    Ok(BaselineModel {
        coefficients: a,
        objective_history,
        steps,
        train_seconds: start.elapsed().as_secs_f64(),
        iteration_seconds,
        config: config.clone(),
    })
}
