//! Scalar summaries of a fitted model: prediction error and sparsity.

use osga::{Error, Result};

/// Coefficients with magnitude at or below this count as zero.
pub const SPARSITY_TOL: f64 = 1e-10;

/// Root mean squared error between predictions and targets.
pub fn rmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            got: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    let sum_sq: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((sum_sq / predictions.len() as f64).sqrt())
}

/// Number of coefficients farther than `SPARSITY_TOL` from zero.
pub fn sparsity(coefficients: &[f64]) -> usize {
    coefficients.iter().filter(|c| c.abs() > SPARSITY_TOL).count()
}
