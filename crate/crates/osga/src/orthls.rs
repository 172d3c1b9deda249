//! Incremental orthonormal factorization for least-squares projection.
//!
//! [`OrthoFactor`] maintains a thin QR-style factorization of a growing set of
//! columns under the empirical inner product: an orthonormal basis `q_1..q_r`
//! of the span of the accepted columns together with the upper-triangular
//! coefficients expressing each accepted column in that basis.  Columns are
//! appended with modified Gram-Schmidt plus one full re-orthogonalization pass
//! (the classical "twice is enough" remedy for cancellation), so the basis
//! stays orthonormal to near machine precision even when incoming columns are
//! strongly correlated with the current span.
//!
//! Columns whose component outside the current span falls below a relative
//! rank tolerance are rejected rather than admitted as garbage directions;
//! callers treat a rejection as "this atom is numerically dependent on what
//! you already have" and move on to their next candidate.

use crate::empirical;
use crate::error::{Error, Result};
use ndarray::Array1;
use std::cmp::Ordering;

/// Relative rank tolerance: a column is rejected when its orthogonalized
/// remainder has empirical norm below this factor times the largest raw
/// column norm seen so far.
const RANK_TOL_FACTOR: f64 = 1e-10;

/// Result of projecting a vector onto the span of the accepted columns.
#[derive(Debug, Clone)]
pub struct Projection {
    /// Coefficients of the projection in the orthonormal basis.
    pub basis_coefficients: Vec<f64>,
    /// The projection itself, evaluated at the sample points.
    pub fitted: Array1<f64>,
    /// `y - fitted`.
    pub residual: Array1<f64>,
}

/// Which incoming columns an append call admitted and which it rejected.
#[derive(Debug, Clone, Default)]
pub struct AppendOutcome {
    /// Source indices of columns accepted into the basis, in append order.
    pub accepted: Vec<usize>,
    /// Source indices rejected as numerically dependent on the current span.
    pub rejected: Vec<usize>,
}

/// Growing orthonormal factorization of a set of columns in `R^n` under the
/// empirical inner product.
#[derive(Debug, Clone)]
pub struct OrthoFactor {
    n: usize,
    /// Orthonormal basis vectors, unit empirical norm.
    basis: Vec<Array1<f64>>,
    /// Upper-triangular coefficients: `triangular[j]` holds the expansion of
    /// accepted column `j` in `basis[0..=j]`, diagonal entry last.
    triangular: Vec<Vec<f64>>,
    /// Caller-supplied identity of each accepted column.
    sources: Vec<usize>,
    /// Largest raw column empirical norm seen (accepted or not); anchors the
    /// relative rank tolerance.
    max_seen_norm: f64,
}

impl OrthoFactor {
    /// Empty factorization over `R^n`.
    pub fn new(n: usize) -> Self {
        OrthoFactor {
            n,
            basis: Vec::new(),
            triangular: Vec::new(),
            sources: Vec::new(),
            max_seen_norm: 0.0,
        }
    }

    /// Sample-space dimension `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of accepted columns (= rank of the factorization).
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Source indices of the accepted columns, in acceptance order.
    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    /// The orthonormal basis vectors.
    pub fn basis(&self) -> &[Array1<f64>] {
        &self.basis
    }

    /// Current absolute rank tolerance.
    pub fn rank_tolerance(&self) -> f64 {
        RANK_TOL_FACTOR * self.max_seen_norm
    }

    /// Orthogonalize `columns` against the current basis and append the ones
    /// that carry a new direction.
    ///
    /// `sources[i]` is the caller's identity for `columns[i]` and is echoed
    /// back in the outcome.  Accepted columns extend the basis in the order
    /// given; rejected columns leave the factorization untouched.
    pub fn append(&mut self, columns: &[Array1<f64>], sources: &[usize]) -> Result<AppendOutcome> {
        debug_assert_eq!(columns.len(), sources.len());
        let mut outcome = AppendOutcome::default();
        for (column, &source) in columns.iter().zip(sources) {
            if column.len() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: column.len(),
                });
            }
            let raw_norm = empirical::norm(column);
            if raw_norm > self.max_seen_norm {
                self.max_seen_norm = raw_norm;
            }

            let mut v = column.clone();
            let mut coeffs = vec![0.0; self.rank()];
            // Modified Gram-Schmidt, then one re-orthogonalization pass to
            // mop up cancellation when the column nearly lies in the span.
            for _pass in 0..2 {
                for (i, q) in self.basis.iter().enumerate() {
                    let c = empirical::dot(q, &v);
                    v.scaled_add(-c, q);
                    coeffs[i] += c;
                }
            }
            let remainder = empirical::norm(&v);
            // Reject unless the leftover direction is strictly above the
            // tolerance; NaN and zero norms fail this on purpose.
            let carries_new_direction =
                remainder.partial_cmp(&self.rank_tolerance()) == Some(Ordering::Greater);
            if !carries_new_direction || remainder == 0.0 {
                outcome.rejected.push(source);
                continue;
            }
            v.mapv_inplace(|x| x / remainder);
            coeffs.push(remainder);
            self.basis.push(v);
            self.triangular.push(coeffs);
            self.sources.push(source);
            outcome.accepted.push(source);
        }
        Ok(outcome)
    }

    /// Orthogonal projection of `y` onto the span of the accepted columns.
    ///
    /// With an empty factorization the projection is zero and the residual is
    /// `y` itself.
    pub fn project(&self, y: &Array1<f64>) -> Result<Projection> {
        if y.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: y.len(),
            });
        }
        let mut fitted = Array1::zeros(self.n);
        let mut basis_coefficients = Vec::with_capacity(self.rank());
        for q in &self.basis {
            let c = empirical::dot(q, y);
            fitted.scaled_add(c, q);
            basis_coefficients.push(c);
        }
        let residual = y - &fitted;
        Ok(Projection {
            basis_coefficients,
            fitted,
            residual,
        })
    }

    /// Convert basis coefficients into coefficients on the original accepted
    /// columns by back-substitution through the triangular factor.
    ///
    /// If `basis_coefficients` came from [`project`](Self::project), the
    /// result `a` satisfies `sum_j a_j * column_j = fitted` for the accepted
    /// columns in acceptance order.
    pub fn column_coefficients(&self, basis_coefficients: &[f64]) -> Result<Vec<f64>> {
        let r = self.rank();
        if basis_coefficients.len() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                got: basis_coefficients.len(),
            });
        }
        let mut a = basis_coefficients.to_vec();
        // triangular[j][i] is the coefficient of basis i in column j (i <= j),
        // so solving R a = c walks columns from the last to the first.
        for j in (0..r).rev() {
            let diag = self.triangular[j][j];
            if diag.abs() <= self.rank_tolerance() {
                return Err(Error::SingularFactor { column: j });
            }
            a[j] /= diag;
            let aj = a[j];
            for (ai, tji) in a.iter_mut().zip(&self.triangular[j]).take(j) {
                *ai -= tji * aj;
            }
        }
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn unit(n: usize, i: usize) -> Array1<f64> {
        let mut v = Array1::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn empty_factor_projects_to_zero() {
        let factor = OrthoFactor::new(3);
        let y = array![1.0, -2.0, 3.0];
        let p = factor.project(&y).unwrap();
        assert!(p.basis_coefficients.is_empty());
        assert_eq!(p.fitted, Array1::zeros(3));
        assert_eq!(p.residual, y);
    }

    #[test]
    fn single_column_is_normalized() {
        let mut factor = OrthoFactor::new(4);
        let col = Array1::from_elem(4, 2.0);
        let outcome = factor.append(&[col], &[7]).unwrap();
        assert_eq!(outcome.accepted, vec![7]);
        assert_eq!(factor.rank(), 1);
        assert!((empirical::norm(&factor.basis()[0]) - 1.0).abs() < 1e-15);
        // Empirical norm of the constant-2 column is 2, so the diagonal is 2.
        assert!((factor.triangular[0][0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn duplicate_column_is_rejected() {
        let mut factor = OrthoFactor::new(5);
        let col = array![1.0, 2.0, 3.0, 4.0, 5.0];
        factor.append(std::slice::from_ref(&col), &[0]).unwrap();
        let outcome = factor.append(&[col.clone(), col], &[1, 2]).unwrap();
        assert!(outcome.accepted.is_empty());
        assert_eq!(outcome.rejected, vec![1, 2]);
        assert_eq!(factor.rank(), 1);
    }

    #[test]
    fn zero_column_is_rejected() {
        let mut factor = OrthoFactor::new(3);
        let outcome = factor.append(&[Array1::zeros(3)], &[0]).unwrap();
        assert_eq!(outcome.rejected, vec![0]);
        assert_eq!(factor.rank(), 0);
    }

    #[test]
    fn wrong_length_column_errors() {
        let mut factor = OrthoFactor::new(3);
        let err = factor.append(&[Array1::zeros(4)], &[0]).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 3,
                got: 4
            }
        );
    }

    #[test]
    fn projection_matches_normal_equations_on_known_example() {
        // Span of (1,1,0) and (0,0,1); project (1,0,2).
        let mut factor = OrthoFactor::new(3);
        factor
            .append(&[array![1.0, 1.0, 0.0], array![0.0, 0.0, 1.0]], &[0, 1])
            .unwrap();
        let p = factor.project(&array![1.0, 0.0, 2.0]).unwrap();
        // Projection onto span is (0.5, 0.5, 2).
        let expect = array![0.5, 0.5, 2.0];
        for i in 0..3 {
            assert!((p.fitted[i] - expect[i]).abs() < 1e-14);
        }
        assert!((p.residual[0] - 0.5).abs() < 1e-14);
        assert!((p.residual[1] + 0.5).abs() < 1e-14);
        assert!(p.residual[2].abs() < 1e-14);
    }

    #[test]
    fn column_coefficients_reconstruct_the_projection() {
        let cols = [
            array![1.0, 1.0, 0.0, 0.0],
            array![1.0, 0.0, 1.0, 0.0],
            array![0.0, 1.0, 1.0, 1.0],
        ];
        let mut factor = OrthoFactor::new(4);
        factor.append(&cols, &[0, 1, 2]).unwrap();
        let y = array![2.0, -1.0, 0.5, 3.0];
        let p = factor.project(&y).unwrap();
        let a = factor.column_coefficients(&p.basis_coefficients).unwrap();
        let mut recon = Array1::zeros(4);
        for (ai, col) in a.iter().zip(&cols) {
            recon.scaled_add(*ai, col);
        }
        for i in 0..4 {
            assert!(
                (recon[i] - p.fitted[i]).abs() < 1e-12,
                "reconstruction differs at {i}: {} vs {}",
                recon[i],
                p.fitted[i]
            );
        }
    }

    #[test]
    fn coefficients_on_orthonormal_input_are_the_basis_coefficients() {
        let mut factor = OrthoFactor::new(3);
        factor.append(&[unit(3, 0), unit(3, 2)], &[0, 1]).unwrap();
        // Basis vectors are the inputs scaled to unit *empirical* norm, so the
        // triangular factor is diagonal and back-substitution just rescales.
        let a = factor.column_coefficients(&[2.0, -3.0]).unwrap();
        let e0 = empirical::norm(&unit(3, 0)); // 1/sqrt(3)
        assert!((a[0] - 2.0 / e0).abs() < 1e-12);
        assert!((a[1] + 3.0 / e0).abs() < 1e-12);
    }

    #[test]
    fn coefficient_length_mismatch_errors() {
        let mut factor = OrthoFactor::new(2);
        factor.append(&[unit(2, 0)], &[0]).unwrap();
        let err = factor.column_coefficients(&[1.0, 2.0]).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 1,
                got: 2
            }
        );
    }

    #[test]
    fn near_dependent_column_is_rejected_not_amplified() {
        // Second column differs from the first by 1e-13 in one coordinate:
        // far below the rank tolerance relative to norm ~1.
        let mut factor = OrthoFactor::new(2);
        let a = array![1.0, 1.0];
        let mut b = a.clone();
        b[1] += 1e-13;
        factor.append(std::slice::from_ref(&a), &[0]).unwrap();
        let outcome = factor.append(&[b], &[1]).unwrap();
        assert_eq!(outcome.rejected, vec![1]);
    }

    #[test]
    fn appending_never_increases_projection_residual() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(2..30);
            let y = Array1::from_shape_fn(n, |_| rng.random::<f64>() - 0.5);
            let mut factor = OrthoFactor::new(n);
            let mut prev = empirical::norm(&y);
            for j in 0..rng.random_range(1..8) {
                let col = Array1::from_shape_fn(n, |_| rng.random::<f64>() - 0.5);
                factor.append(&[col], &[j]).unwrap();
                let now = empirical::norm(&factor.project(&y).unwrap().residual);
                assert!(
                    now <= prev + 1e-12,
                    "residual grew after append: {prev} -> {now}"
                );
                prev = now;
            }
        }
    }

    #[test]
    fn basis_stays_orthonormal_over_many_random_append_sequences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
        for round in 0..1000 {
            let n = rng.random_range(1..=50);
            let cols = rng.random_range(1..=20usize);
            let mut factor = OrthoFactor::new(n);
            for j in 0..cols {
                // Mix in near-duplicates of earlier columns to stress the
                // re-orthogonalization pass.
                let col = if j > 0 && rng.random::<f64>() < 0.3 {
                    let base = rng.random_range(0..j.min(factor.rank().max(1)));
                    let mut c = if factor.rank() > 0 {
                        factor.basis()[base.min(factor.rank() - 1)].clone()
                    } else {
                        Array1::zeros(n)
                    };
                    c.mapv_inplace(|x| x * 3.0);
                    if rng.random::<f64>() < 0.5 {
                        let idx = rng.random_range(0..n);
                        c[idx] += 1e-9;
                    }
                    c
                } else {
                    Array1::from_shape_fn(n, |_| 2.0 * rng.random::<f64>() - 1.0)
                };
                factor.append(&[col], &[j]).unwrap();
            }
            for i in 0..factor.rank() {
                for k in 0..=i {
                    let d = empirical::dot(&factor.basis()[i], &factor.basis()[k]);
                    let want = if i == k { 1.0 } else { 0.0 };
                    assert!(
                        (d - want).abs() < 1e-10,
                        "round {round}: <q{i}, q{k}> = {d}, want {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn projection_is_idempotent() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let n = rng.random_range(2..40);
            let mut factor = OrthoFactor::new(n);
            for j in 0..rng.random_range(1..6) {
                let col = Array1::from_shape_fn(n, |_| rng.random::<f64>() - 0.5);
                factor.append(&[col], &[j]).unwrap();
            }
            let y = Array1::from_shape_fn(n, |_| rng.random::<f64>() - 0.5);
            let p1 = factor.project(&y).unwrap();
            let p2 = factor.project(&p1.fitted).unwrap();
            for i in 0..n {
                assert!((p2.fitted[i] - p1.fitted[i]).abs() < 1e-12);
            }
            assert!(empirical::norm(&p2.residual) < 1e-12);
        }
    }
}
