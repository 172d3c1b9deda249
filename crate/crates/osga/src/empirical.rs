//! Empirical (sample-averaged) inner products and norms.
//!
//! Everything in this crate measures length and angle with
//! `<u, v> = (1/n) sum_{i} u_i v_i`, the inner product induced by the uniform
//! empirical measure on the `n` sample points.  Keeping the averaging in one
//! place avoids the classic off-by-`1/n` bugs when mixing Gram matrices,
//! correlations, and norms.

use ndarray::Array1;

/// Empirical inner product `(1/n) sum u_i v_i`.
///
/// Panics in debug builds if the lengths differ; callers validate dimensions
/// at their own boundaries.
pub fn dot(u: &Array1<f64>, v: &Array1<f64>) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.dot(v) / u.len() as f64
}

/// Squared empirical norm `(1/n) sum v_i^2`.
pub fn norm_sq(v: &Array1<f64>) -> f64 {
    v.dot(v) / v.len() as f64
}

/// Empirical norm `sqrt((1/n) sum v_i^2)`.
pub fn norm(v: &Array1<f64>) -> f64 {
    norm_sq(v).sqrt()
}
