//! Dictionary construction, empirical normalization, and coherence.
//!
//! A dictionary is a list of scalar atom functions; evaluated on a sample of
//! points and rescaled to unit empirical norm it becomes a [`DesignMatrix`],
//! the object every fit in this crate consumes.  Two families used in the
//! experiments are built in: a trigonometric dictionary `cos(k x)` and a
//! Gaussian radial dictionary `exp(-sigma (x - t)^2)`.  Arbitrary vectors can
//! be wrapped as atoms too, which is how the exact-arithmetic bound checks
//! reuse the same machinery.
//!
//! Coherence — the largest absolute empirical inner product between distinct
//! normalized atoms — controls how many atoms the super greedy fit may take
//! per iteration: a step size `s` is admissible when `s - 1 <= 1/(2M)`.

use crate::empirical;
use crate::error::{Error, Result};
use ndarray::Array1;
use std::fmt;
use std::sync::Arc;

/// A scalar atom function.
#[derive(Clone)]
pub enum AtomSpec {
    /// `cos(frequency * x)`.
    TrigCosine { frequency: u32 },
    /// `exp(-shape * (x - center)^2)`.
    GaussianRbf { center: f64, shape: f64 },
    /// Arbitrary caller-supplied function.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl AtomSpec {
    /// Evaluate the raw (un-normalized) atom at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            AtomSpec::TrigCosine { frequency } => (f64::from(*frequency) * x).cos(),
            AtomSpec::GaussianRbf { center, shape } => (-shape * (x - center).powi(2)).exp(),
            AtomSpec::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for AtomSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomSpec::TrigCosine { frequency } => write!(f, "TrigCosine(k={frequency})"),
            AtomSpec::GaussianRbf { center, shape } => {
                write!(f, "GaussianRbf(t={center}, sigma={shape})")
            }
            AtomSpec::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Trigonometric dictionary `cos(k x)` for `k = 1..=max_frequency`.
pub fn build_tpd(max_frequency: u32) -> Vec<AtomSpec> {
    (1..=max_frequency)
        .map(|frequency| AtomSpec::TrigCosine { frequency })
        .collect()
}

/// Gaussian radial dictionary `exp(-shape (x - t)^2)` over the given centers.
pub fn build_grd(centers: &[f64], shape: f64) -> Vec<AtomSpec> {
    centers
        .iter()
        .map(|&center| AtomSpec::GaussianRbf { center, shape })
        .collect()
}

/// A dictionary evaluated on a fixed sample and normalized to unit empirical
/// norm per atom.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    columns: Vec<Array1<f64>>,
    scales: Vec<f64>,
    specs: Vec<AtomSpec>,
    n: usize,
}

impl DesignMatrix {
    /// Number of atoms.
    pub fn n_atoms(&self) -> usize {
        self.columns.len()
    }

    /// Number of sample points each column is evaluated on.
    pub fn n_samples(&self) -> usize {
        self.n
    }

    /// Normalized column for atom `i` (unit empirical norm).
    pub fn column(&self, i: usize) -> &Array1<f64> {
        &self.columns[i]
    }

    /// All normalized columns.
    pub fn columns(&self) -> &[Array1<f64>] {
        &self.columns
    }

    /// Empirical norm the raw atom `i` had on the sample; dividing the raw
    /// atom by this scale reproduces the normalized column.
    pub fn scale(&self, i: usize) -> f64 {
        self.scales[i]
    }

    /// The atom function behind column `i`.
    pub fn spec(&self, i: usize) -> &AtomSpec {
        &self.specs[i]
    }

    /// Normalized atom `i` evaluated at an arbitrary point `x` (not
    /// necessarily a sample point).
    pub fn eval_normalized_at(&self, i: usize, x: f64) -> f64 {
        self.specs[i].eval(x) / self.scales[i]
    }

    /// Empirical inner products of `v` with every normalized column.
    pub fn correlations(&self, v: &Array1<f64>) -> Vec<f64> {
        self.columns.iter().map(|c| empirical::dot(c, v)).collect()
    }

    /// Evaluate every normalized atom on new points, reusing this design's
    /// scales.
    ///
    /// This is how a model fitted on the design predicts off-sample: the
    /// normalization must stay the one measured on the training sample.
    pub fn eval_columns_at(&self, points: &Array1<f64>) -> Vec<Array1<f64>> {
        (0..self.n_atoms())
            .map(|i| points.mapv(|x| self.eval_normalized_at(i, x)))
            .collect()
    }
}

/// Wrap raw vectors as a normalized design over the index grid `0..n-1`.
///
/// All vectors must share the same nonzero length; zero vectors are reported
/// as [`Error::ZeroNormAtom`].
pub fn design_from_raw_columns(raw: Vec<Vec<f64>>) -> Result<DesignMatrix> {
    let n = raw.first().map_or(0, Vec::len);
    for v in &raw {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    let specs: Vec<AtomSpec> = raw
        .into_iter()
        .map(|v| {
            let v = Arc::new(v);
            AtomSpec::Custom(Arc::new(move |x: f64| v[x.round() as usize]))
        })
        .collect();
    let points = Array1::from_shape_fn(n, |i| i as f64);
    eval_normalized_design(&specs, &points)
}

/// Evaluate atoms on `points` and rescale every column to unit empirical
/// norm.
///
/// Fails with [`Error::ZeroNormAtom`] if some atom vanishes (numerically) at
/// every sample point, since such an atom cannot be normalized.
pub fn eval_normalized_design(atoms: &[AtomSpec], points: &Array1<f64>) -> Result<DesignMatrix> {
    let n = points.len();
    let mut columns = Vec::with_capacity(atoms.len());
    let mut scales = Vec::with_capacity(atoms.len());
    for (i, atom) in atoms.iter().enumerate() {
        let mut col = points.mapv(|x| atom.eval(x));
        let scale = empirical::norm(&col);
        if scale <= 0.0 || !scale.is_finite() {
            return Err(Error::ZeroNormAtom(i));
        }
        col.mapv_inplace(|v| v / scale);
        columns.push(col);
        scales.push(scale);
    }
    Ok(DesignMatrix {
        columns,
        scales,
        specs: atoms.to_vec(),
        n,
    })
}

/// Coherence of a normalized design and the step-size budget it admits.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    /// `max_{i != j} |<g_i, g_j>_n|`.
    pub coherence: f64,
    /// First pair attaining the maximum, scanning `i < j` in order.
    pub argmax_pair: (usize, usize),
    /// Largest admissible step size, clamped to the number of atoms.
    pub max_step_size: usize,
}

/// Measure the coherence of a design and derive the admissible step size.
///
/// Needs at least two atoms.  Cost is quadratic in the number of atoms; this
/// is a diagnostic, not a per-iteration operation.
pub fn coherence(design: &DesignMatrix) -> Result<CoherenceReport> {
    let m = design.n_atoms();
    if m < 2 {
        return Err(Error::TooFewAtoms { count: m });
    }
    let mut best = f64::NEG_INFINITY;
    let mut pair = (0, 1);
    for i in 0..m {
        for j in (i + 1)..m {
            let c = empirical::dot(design.column(i), design.column(j)).abs();
            if c > best {
                best = c;
                pair = (i, j);
            }
        }
    }
    Ok(CoherenceReport {
        coherence: best,
        argmax_pair: pair,
        max_step_size: max_step_size(best).min(m),
    })
}

/// Largest step size `s` with `s - 1 <= 1/(2M)` for coherence `M`.
///
/// `M = 0` (an orthogonal dictionary) admits any step size and returns
/// `usize::MAX`; callers clamp to the atom count.  A small slack keeps exact
/// boundary cases (e.g. `M = 0.1` admitting `s = 6`) from falling to the
/// wrong side of the floor.
pub fn max_step_size(coherence: f64) -> usize {
    debug_assert!((0.0..=1.0 + 1e-12).contains(&coherence));
    if coherence <= 0.0 {
        return usize::MAX;
    }
    let s = (1.0 / (2.0 * coherence) + 1.0 + 1e-9).floor();
    if s >= usize::MAX as f64 {
        usize::MAX
    } else {
        (s as usize).max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Array1<f64> {
        Array1::from_shape_fn(n, |i| (i as f64 + 0.5) / n as f64)
    }

    #[test]
    fn trig_atoms_evaluate_as_cosines() {
        let atom = AtomSpec::TrigCosine { frequency: 3 };
        assert!((atom.eval(0.0) - 1.0).abs() < 1e-15);
        assert!((atom.eval(0.5) - 1.5_f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn gaussian_atoms_peak_at_their_center() {
        let atom = AtomSpec::GaussianRbf {
            center: 0.3,
            shape: 200.0,
        };
        assert!((atom.eval(0.3) - 1.0).abs() < 1e-15);
        assert!((atom.eval(0.4) - (-2.0_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn build_tpd_covers_frequencies_one_through_max() {
        let atoms = build_tpd(500);
        assert_eq!(atoms.len(), 500);
        match (&atoms[0], &atoms[499]) {
            (
                AtomSpec::TrigCosine { frequency: 1 },
                AtomSpec::TrigCosine { frequency: 500 },
            ) => {}
            other => panic!("unexpected boundary atoms: {other:?}"),
        }
    }

    #[test]
    fn build_grd_uses_given_centers_in_order() {
        let atoms = build_grd(&[0.1, 0.9], 200.0);
        assert_eq!(atoms.len(), 2);
        match &atoms[1] {
            AtomSpec::GaussianRbf { center, shape } => {
                assert_eq!(*center, 0.9);
                assert_eq!(*shape, 200.0);
            }
            other => panic!("unexpected atom: {other:?}"),
        }
    }

    #[test]
    fn normalized_columns_have_unit_empirical_norm() {
        let atoms = build_tpd(15);
        let design = eval_normalized_design(&atoms, &grid(300)).unwrap();
        for i in 0..design.n_atoms() {
            let norm = empirical::norm(design.column(i));
            assert!((norm - 1.0).abs() < 1e-12, "atom {i}: norm {norm}");
            assert!(design.scale(i) > 0.0);
        }
    }

    #[test]
    fn eval_normalized_at_agrees_with_columns_on_sample_points() {
        let atoms = build_grd(&[0.2, 0.7], 50.0);
        let points = grid(40);
        let design = eval_normalized_design(&atoms, &points).unwrap();
        for i in 0..2 {
            for (k, &x) in points.iter().enumerate() {
                let direct = design.eval_normalized_at(i, x);
                assert!((direct - design.column(i)[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_atom_is_reported_with_its_index() {
        let atoms = vec![
            AtomSpec::TrigCosine { frequency: 1 },
            AtomSpec::Custom(Arc::new(|_| 0.0)),
        ];
        let err = eval_normalized_design(&atoms, &grid(10)).unwrap_err();
        assert_eq!(err, Error::ZeroNormAtom(1));
    }

    #[test]
    fn coherence_of_orthogonal_columns_is_zero_and_unbounded_step() {
        let raw = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let design = design_from_raw_columns(raw).unwrap();
        let report = coherence(&design).unwrap();
        assert!(report.coherence.abs() < 1e-15);
        // Unbounded in principle, clamped to the atom count.
        assert_eq!(report.max_step_size, 3);
    }

    #[test]
    fn coherence_matches_hand_computed_pair() {
        // Normalized columns: e1, e2, and (e1 + e2)/sqrt(2); the mixed column
        // has |<., e1>| = 1/sqrt(2), the e1/e2 pair has 0.
        let raw = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let design = design_from_raw_columns(raw).unwrap();
        let report = coherence(&design).unwrap();
        assert!((report.coherence - 1.0 / 2.0_f64.sqrt()).abs() < 1e-14);
        assert_eq!(report.argmax_pair, (0, 2));
    }

    #[test]
    fn coherence_needs_two_atoms() {
        let design = design_from_raw_columns(vec![vec![1.0, 2.0]]).unwrap();
        assert_eq!(coherence(&design).unwrap_err(), Error::TooFewAtoms { count: 1 });
    }

    #[test]
    fn max_step_size_at_boundary_coherences() {
        // s - 1 <= 1/(2M): M = 0.1 gives exactly s = 6.
        assert_eq!(max_step_size(0.1), 6);
        assert_eq!(max_step_size(0.5), 2);
        assert_eq!(max_step_size(1.0), 1);
        // Slightly above 0.5 the budget drops to 1... careful: 1/(2*0.6)+1 =
        // 1.833 -> floor 1.
        assert_eq!(max_step_size(0.6), 1);
        assert_eq!(max_step_size(0.0), usize::MAX);
    }

    #[test]
    fn max_step_size_is_monotone_in_coherence() {
        let mut prev = usize::MAX;
        for k in 1..=1000 {
            let m = k as f64 / 1000.0;
            let s = max_step_size(m);
            assert!(s <= prev, "step size not monotone at M = {m}");
            assert!(s >= 1);
            prev = s;
        }
    }

    #[test]
    fn admissibility_inequality_holds_at_the_returned_size() {
        for k in 1..=500 {
            let m = k as f64 / 500.0;
            let s = max_step_size(m);
            // The returned s satisfies (s - 1) * 2M <= 1 up to the slack, and
            // s + 1 must violate it.
            assert!((s as f64 - 1.0) * 2.0 * m <= 1.0 + 1e-6);
            assert!(((s + 1) as f64 - 1.0) * 2.0 * m > 1.0);
        }
    }

    #[test]
    fn raw_column_design_round_trips_values() {
        let raw = vec![vec![3.0, 4.0], vec![1.0, -1.0]];
        let design = design_from_raw_columns(raw).unwrap();
        // First column norm: sqrt((9 + 16)/2) = sqrt(12.5).
        let s = 12.5_f64.sqrt();
        assert!((design.scale(0) - s).abs() < 1e-14);
        assert!((design.column(0)[0] - 3.0 / s).abs() < 1e-14);
        // Atoms evaluate by sample index.
        assert!((design.eval_normalized_at(0, 1.0) - 4.0 / s).abs() < 1e-14);
    }

    #[test]
    fn eval_columns_at_keeps_the_training_scales() {
        let atoms = build_grd(&[0.3, 0.8], 100.0);
        let train = grid(50);
        let design = eval_normalized_design(&atoms, &train).unwrap();
        let test = Array1::from_vec(vec![0.05, 0.4, 0.95]);
        let cols = design.eval_columns_at(&test);
        assert_eq!(cols.len(), 2);
        for (i, col) in cols.iter().enumerate() {
            for (k, &x) in test.iter().enumerate() {
                let want = atoms[i].eval(x) / design.scale(i);
                assert!((col[k] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mismatched_raw_column_lengths_error() {
        let err = design_from_raw_columns(vec![vec![1.0, 2.0], vec![1.0]]).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                got: 1
            }
        );
    }
}
