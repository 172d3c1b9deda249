//! Numerical verification of the residual-decay and norm bounds on synthetic
//! instances where every quantity in each bound is directly measurable.
//!
//! Four suites:
//!
//! * `oracle_rate`: targets `f = h + e` with `h` a known sparse combination
//!   of dictionary atoms and `e` orthogonal to every atom, so the
//!   approximation gap `||f - h||_n^2` is exact.  Checks the oracle decay
//!   bound at every greedy iteration.
//! * `l1_ball`: targets that are convex combinations of atoms (unit
//!   coefficient l1 norm), checking the direct decay bound.
//! * `span_norm`: coherence-band bounds on the norm of atom combinations.
//! * `projection_norm`: coherence-band bounds on projection norms.
//!
//! Every instance runs with the admissibility gate enforced, and the greedy
//! engine sees the dictionary only through raw columns on an index grid, so
//! the checks exercise the same code path the benchmarks use.

use ndarray::Array1;
use osga::datagen::Dataset;
use osga::dictionary::{coherence, design_from_raw_columns, DesignMatrix};
use osga::empirical;
use osga::greedy::{osga_fit, GreedyConfig};
use osga::orthls::OrthoFactor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::{self, Write};

use crate::runner::mix_seed;

/// Instances per decay-rate suite.
pub const RATE_INSTANCES: usize = 50;
/// Instances per norm-bound suite.
pub const NORM_INSTANCES: usize = 1000;
/// Relative slack allowed before a bound counts as violated.
pub const REL_TOL: f64 = 1e-9;
/// Worst-case constant in the oracle decay bound
/// `||r_k||^2 <= gap + C l1^2 / (s k)`.
pub const ORACLE_RATE_CONSTANT: f64 = 13.5;
/// Worst-case constant in the convex-combination decay bound
/// `||r_k||^2 <= C l1 / (s k)`.
pub const L1_RATE_CONSTANT: f64 = 40.5;

/// Which decay bound a rate instance is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateBound {
    /// `||r_k||^2 <= gap + 13.5 l1^2 / (s k)`.
    Oracle,
    /// `||r_k||^2 <= 40.5 l1 / (s k)`.
    L1Ball,
}

/// A synthetic decay-rate instance: dictionary, response, and the known
/// quantities the bound is made of.
pub struct RateInstance {
    pub label: String,
    pub design: DesignMatrix,
    pub response: Array1<f64>,
    /// Coefficient l1 norm of the planted combination (normalized atoms).
    pub coefficient_l1: f64,
    /// `||f - h||_n^2` for the planted `h`; 0 when `f` is in the span.
    pub approximation_gap_sq: f64,
    pub coherence: f64,
    pub step_size: usize,
    pub iteration_budget: usize,
}

/// Outcome of checking one instance against its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub suite: &'static str,
    pub label: String,
    /// Number of inequalities evaluated (greedy iterations for the rate
    /// suites, bound sides for the norm suites).
    pub comparisons: usize,
    /// Smallest relative margin by which the bound held; negative means a
    /// violation by that relative amount.
    pub min_slack: f64,
    pub pass: bool,
}

/// All checks from a verification run.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub checks: Vec<BoundCheck>,
}

impl VerificationReport {
    pub fn violations(&self) -> Vec<&BoundCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Counts of (passed, total) per suite, in first-seen order.
    pub fn suite_tallies(&self) -> Vec<(&'static str, usize, usize)> {
        let mut tallies: Vec<(&'static str, usize, usize)> = Vec::new();
        for check in &self.checks {
            match tallies.iter_mut().find(|(name, _, _)| *name == check.suite) {
                Some((_, passed, total)) => {
                    *passed += usize::from(check.pass);
                    *total += 1;
                }
                None => tallies.push((check.suite, usize::from(check.pass), 1)),
            }
        }
        tallies
    }

    /// Write `suite,label,comparisons,min_slack,pass` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "suite,label,comparisons,min_slack,pass")?;
        for c in &self.checks {
            writeln!(
                w,
                "{},{},{},{:.16e},{}",
                c.suite, c.label, c.comparisons, c.min_slack, c.pass
            )?;
        }
        Ok(())
    }
}

/// Run every suite at its standard size.
pub fn default_verification(seed: u64) -> VerificationReport {
    let mut checks = Vec::new();
    checks.extend(
        oracle_rate_instances(RATE_INSTANCES, mix_seed(seed, 1))
            .iter()
            .map(|inst| check_rate_instance(inst, RateBound::Oracle)),
    );
    checks.extend(
        l1_ball_instances(RATE_INSTANCES, mix_seed(seed, 2))
            .iter()
            .map(|inst| check_rate_instance(inst, RateBound::L1Ball)),
    );
    checks.extend(span_norm_suite(NORM_INSTANCES, mix_seed(seed, 3)));
    checks.extend(projection_norm_suite(NORM_INSTANCES, mix_seed(seed, 4)));
    VerificationReport { checks }
}

/// Standard normal raw columns for a synthetic dictionary.
fn gaussian_columns(rng: &mut ChaCha8Rng, dim: usize, atoms: usize) -> Vec<Vec<f64>> {
    (0..atoms)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    z
                })
                .collect()
        })
        .collect()
}

/// Pick `count` distinct indices from `0..n` uniformly.
fn pick_distinct(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = rng.random_range(i..n);
        indices.swap(i, j);
    }
    indices.truncate(count);
    indices
}

/// A planted combination `h = sum c_j g_j` over normalized atoms.
struct Planted {
    combination: Array1<f64>,
    coefficient_l1: f64,
}

fn plant_combination(
    design: &DesignMatrix,
    support: &[usize],
    coefficients: &[f64],
) -> Planted {
    let mut combination = Array1::zeros(design.n_samples());
    for (&atom, &c) in support.iter().zip(coefficients) {
        combination.scaled_add(c, design.column(atom));
    }
    Planted {
        combination,
        coefficient_l1: coefficients.iter().map(|c| c.abs()).sum(),
    }
}

/// Noise orthogonal to every atom, scaled to the requested empirical norm.
///
/// Returns a zero vector when the sample happens to lie in the atom span
/// (possible only when the dictionary spans the whole space).
fn orthogonal_noise(
    rng: &mut ChaCha8Rng,
    design: &DesignMatrix,
    target_norm: f64,
) -> Array1<f64> {
    let dim = design.n_samples();
    let raw = Array1::from_shape_fn(dim, |_| {
        let z: f64 = StandardNormal.sample(rng);
        z
    });
    let mut factor = OrthoFactor::new(dim);
    let columns: Vec<Array1<f64>> = design.columns().to_vec();
    let sources: Vec<usize> = (0..design.n_atoms()).collect();
    factor
        .append(&columns, &sources)
        .expect("appending freshly normalized columns cannot fail");
    let residual = factor
        .project(&raw)
        .expect("projection after append cannot fail")
        .residual;
    let norm = empirical::norm(&residual);
    if norm <= 1e-12 {
        return Array1::zeros(dim);
    }
    residual * (target_norm / norm)
}

/// Instances for the oracle decay bound: noisy sparse targets over random
/// incoherent dictionaries, plus pinned shapes (an orthonormal sanity case
/// and wide Gaussian instances run at the largest admissible step size).
pub fn oracle_rate_instances(count: usize, seed: u64) -> Vec<RateInstance> {
    let mut out = Vec::with_capacity(count);
    out.push(orthonormal_instance());
    out.push(gauss_max_step_instance(mix_seed(seed, 900_001), "oracle/gauss_smax_0"));
    out.push(gauss_max_step_instance(mix_seed(seed, 900_002), "oracle/gauss_smax_1"));
    let mut stream = 0u64;
    while out.len() < count {
        let label = format!("oracle/random_{:03}", out.len());
        out.push(random_oracle_instance(mix_seed(seed, stream), label));
        stream += 1;
    }
    out.truncate(count);
    out
}

/// Orthonormal dictionary with the target equal to its first atom: the very
/// first iteration must zero the residual.
fn orthonormal_instance() -> RateInstance {
    let dim = 40;
    let atoms = 8;
    let mut raw = Vec::with_capacity(atoms);
    for i in 0..atoms {
        let mut col = vec![0.0; dim];
        col[i] = 1.0;
        raw.push(col);
    }
    let design = design_from_raw_columns(raw).expect("unit columns are valid");
    let report = coherence(&design).expect("enough atoms");
    let response = design.column(0).clone();
    RateInstance {
        label: "oracle/orthonormal_e1".into(),
        response,
        coefficient_l1: 1.0,
        approximation_gap_sq: 0.0,
        coherence: report.coherence,
        step_size: 2,
        iteration_budget: 4,
        design,
    }
}

fn random_oracle_instance(seed: u64, label: String) -> RateInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.random_range(200..=400);
    let atoms = rng.random_range(30..=60);
    build_oracle_instance(&mut rng, dim, atoms, label, None)
}

/// Wide instance pinned to the largest admissible step size.
fn gauss_max_step_instance(seed: u64, label: &str) -> RateInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    build_oracle_instance(&mut rng, 400, 50, label.to_string(), Some(usize::MAX))
}

/// `requested_step`: `None` draws a random admissible step size; `Some(s)`
/// clamps `s` to the admissible maximum.
fn build_oracle_instance(
    rng: &mut ChaCha8Rng,
    dim: usize,
    atoms: usize,
    label: String,
    requested_step: Option<usize>,
) -> RateInstance {
    let raw = gaussian_columns(rng, dim, atoms);
    let design = design_from_raw_columns(raw).expect("gaussian columns are valid");
    let report = coherence(&design).expect("enough atoms");
    let s_max = report.max_step_size.max(1);
    let step_size = match requested_step {
        Some(s) => s.min(s_max),
        None => rng.random_range(1..=s_max.min(8)),
    };

    let support_size = rng.random_range(5..=12.min(atoms));
    let support = pick_distinct(rng, atoms, support_size);
    let coefficients: Vec<f64> = (0..support_size)
        .map(|_| {
            let magnitude = rng.random_range(0.5..1.5);
            if rng.random::<bool>() {
                magnitude
            } else {
                -magnitude
            }
        })
        .collect();
    let planted = plant_combination(&design, &support, &coefficients);

    let noise_ratio = rng.random_range(0.1..0.5);
    let noise = orthogonal_noise(
        rng,
        &design,
        noise_ratio * empirical::norm(&planted.combination),
    );
    let gap_sq = empirical::norm_sq(&noise);
    let response = &planted.combination + &noise;

    let iteration_budget = (atoms / step_size).clamp(1, 12);
    RateInstance {
        label,
        response,
        coefficient_l1: planted.coefficient_l1,
        approximation_gap_sq: gap_sq,
        coherence: report.coherence,
        step_size,
        iteration_budget,
        design,
    }
}

/// Instances for the convex-combination bound: nonnegative coefficients
/// summing to one, no noise.
pub fn l1_ball_instances(count: usize, seed: u64) -> Vec<RateInstance> {
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
        let dim = rng.random_range(100..=300);
        let atoms = rng.random_range(20..=40);
        let raw = gaussian_columns(&mut rng, dim, atoms);
        let design = design_from_raw_columns(raw).expect("gaussian columns are valid");
        let report = coherence(&design).expect("enough atoms");
        let s_max = report.max_step_size.max(1);
        let step_size = rng.random_range(1..=s_max.min(6));

        let support_size = rng.random_range(4..=10.min(atoms));
        let support = pick_distinct(&mut rng, atoms, support_size);
        let mut coefficients: Vec<f64> =
            (0..support_size).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = coefficients.iter().sum();
        for c in &mut coefficients {
            *c /= total;
        }
        let planted = plant_combination(&design, &support, &coefficients);

        let iteration_budget = (atoms / step_size).clamp(1, 12);
        out.push(RateInstance {
            label: format!("l1_ball/random_{i:03}"),
            response: planted.combination,
            coefficient_l1: planted.coefficient_l1,
            approximation_gap_sq: 0.0,
            coherence: report.coherence,
            step_size,
            iteration_budget,
            design,
        });
    }
    out
}

/// Fit an instance with the admissibility gate on and check its decay bound
/// at every completed iteration.
pub fn check_rate_instance(instance: &RateInstance, bound: RateBound) -> BoundCheck {
    let suite = match bound {
        RateBound::Oracle => "oracle_rate",
        RateBound::L1Ball => "l1_ball",
    };
    let grid = Array1::from_shape_fn(instance.design.n_samples(), |i| i as f64);
    let dataset = Dataset::from_parts(grid, instance.response.clone())
        .expect("instance dimensions agree");
    let mut config = GreedyConfig::new(instance.step_size, instance.iteration_budget);
    config.enforce_coherence_gate = true;
    let fit = match osga_fit(&dataset, &instance.design, &config) {
        Ok(fit) => fit,
        Err(e) => {
            return BoundCheck {
                suite,
                label: format!("{} (fit failed: {e})", instance.label),
                comparisons: 0,
                min_slack: f64::NEG_INFINITY,
                pass: false,
            }
        }
    };

    let budget_numerator = match bound {
        RateBound::Oracle => ORACLE_RATE_CONSTANT * instance.coefficient_l1.powi(2),
        RateBound::L1Ball => L1_RATE_CONSTANT * instance.coefficient_l1,
    };
    let mut min_slack = f64::INFINITY;
    for (idx, record) in fit.history.iter().enumerate() {
        let k = (idx + 1) as f64;
        let bound_value = instance.approximation_gap_sq
            + budget_numerator / (instance.step_size as f64 * k);
        let measured = record.residual_norm * record.residual_norm;
        let slack = (bound_value - measured) / bound_value;
        min_slack = min_slack.min(slack);
    }
    BoundCheck {
        suite,
        label: instance.label.clone(),
        comparisons: fit.iterations(),
        min_slack,
        pass: min_slack >= -REL_TOL,
    }
}

/// Shared shape for the norm-bound suites: a random Gaussian dictionary and
/// a random subset of `s` atoms.
struct NormInstance {
    design: DesignMatrix,
    coherence: f64,
    picked: Vec<usize>,
}

fn random_norm_instance(rng: &mut ChaCha8Rng) -> NormInstance {
    let dim = rng.random_range(100..=400);
    let atoms = rng.random_range(6..=12);
    let s = rng.random_range(2..=6.min(atoms));
    let raw = gaussian_columns(rng, dim, atoms);
    let design = design_from_raw_columns(raw).expect("gaussian columns are valid");
    let report = coherence(&design).expect("enough atoms");
    let picked = pick_distinct(rng, atoms, s);
    NormInstance {
        design,
        coherence: report.coherence,
        picked,
    }
}

/// Check `(1 - M(s-1)) sum a^2 <= ||sum a_i g_i||_n^2 <= (1 + M(s-1)) sum a^2`
/// on random combinations.
pub fn span_norm_suite(count: usize, seed: u64) -> Vec<BoundCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let inst = random_norm_instance(&mut rng);
            let s = inst.picked.len();
            let band = inst.coherence * (s - 1) as f64;
            let coefficients: Vec<f64> =
                (0..s).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
            let sum_sq: f64 = coefficients.iter().map(|a| a * a).sum();
            let mut combination = Array1::zeros(inst.design.n_samples());
            for (&atom, &a) in inst.picked.iter().zip(&coefficients) {
                combination.scaled_add(a, inst.design.column(atom));
            }
            let norm_sq = empirical::norm_sq(&combination);
            let scale = sum_sq.max(1.0);
            let upper_slack = ((1.0 + band) * sum_sq - norm_sq) / scale;
            let lower_slack = (norm_sq - (1.0 - band) * sum_sq) / scale;
            let min_slack = upper_slack.min(lower_slack);
            BoundCheck {
                suite: "span_norm",
                label: format!("span_norm/random_{i:04}"),
                comparisons: 2,
                min_slack,
                pass: min_slack >= -REL_TOL,
            }
        })
        .collect()
}

/// Check `sum <f,g_i>^2 / (1 + M(s-1)) <= ||Pf||_n^2`, and the matching
/// upper bound when `M(s-1) < 1`, on random projections.
pub fn projection_norm_suite(count: usize, seed: u64) -> Vec<BoundCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let inst = random_norm_instance(&mut rng);
            let s = inst.picked.len();
            let band = inst.coherence * (s - 1) as f64;
            let dim = inst.design.n_samples();
            let f = Array1::from_shape_fn(dim, |_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z
            });
            let mut factor = OrthoFactor::new(dim);
            let columns: Vec<Array1<f64>> = inst
                .picked
                .iter()
                .map(|&atom| inst.design.column(atom).clone())
                .collect();
            factor
                .append(&columns, &inst.picked)
                .expect("random Gaussian atoms are independent");
            let projection = factor.project(&f).expect("projection after append");
            let proj_norm_sq = empirical::norm_sq(&projection.fitted);
            let corr_sq: f64 = inst
                .picked
                .iter()
                .map(|&atom| empirical::dot(inst.design.column(atom), &f).powi(2))
                .sum();
            let scale = corr_sq.max(1.0);
            let lower_slack = (proj_norm_sq - corr_sq / (1.0 + band)) / scale;
            let (comparisons, min_slack) = if band < 1.0 {
                let upper_slack = (corr_sq / (1.0 - band) - proj_norm_sq) / scale;
                (2, lower_slack.min(upper_slack))
            } else {
                (1, lower_slack)
            };
            BoundCheck {
                suite: "projection_norm",
                label: format!("projection_norm/random_{i:04}"),
                comparisons,
                min_slack,
                pass: min_slack >= -REL_TOL,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_instance_zeroes_the_residual_immediately() {
        let inst = orthonormal_instance();
        let grid = Array1::from_shape_fn(inst.design.n_samples(), |i| i as f64);
        let dataset = Dataset::from_parts(grid, inst.response.clone()).unwrap();
        let mut config = GreedyConfig::new(inst.step_size, inst.iteration_budget);
        config.enforce_coherence_gate = true;
        let fit = osga_fit(&dataset, &inst.design, &config).unwrap();
        assert!(
            fit.history[0].residual_norm <= 1e-12,
            "first iteration should capture the atom exactly, residual {}",
            fit.history[0].residual_norm
        );
    }

    #[test]
    fn oracle_suite_includes_the_pinned_instances() {
        let instances = oracle_rate_instances(10, 5);
        assert_eq!(instances.len(), 10);
        assert_eq!(instances[0].label, "oracle/orthonormal_e1");
        assert!(instances[1].label.starts_with("oracle/gauss_smax"));
        // The pinned wide instances run at the admissibility limit.
        let report = coherence(&instances[1].design).unwrap();
        assert_eq!(instances[1].step_size, report.max_step_size);
    }

    #[test]
    fn rate_instances_are_reproducible() {
        let a = l1_ball_instances(3, 42);
        let b = l1_ball_instances(3, 42);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.label, y.label);
            assert_eq!(x.step_size, y.step_size);
            assert_eq!(x.coefficient_l1.to_bits(), y.coefficient_l1.to_bits());
        }
    }

    #[test]
    fn l1_ball_coefficients_sum_to_one() {
        for inst in l1_ball_instances(5, 7) {
            assert!(
                (inst.coefficient_l1 - 1.0).abs() < 1e-12,
                "instance {} has l1 {}",
                inst.label,
                inst.coefficient_l1
            );
            assert_eq!(inst.approximation_gap_sq, 0.0);
        }
    }

    #[test]
    fn oracle_noise_is_orthogonal_to_every_atom() {
        let inst = random_oracle_instance(11, "oracle/test".into());
        // Recover the noise as response minus what the oracle knows: here we
        // simply check the gap is consistent with a residual after
        // projecting the response onto the full dictionary span.
        let mut factor = OrthoFactor::new(inst.design.n_samples());
        let columns: Vec<Array1<f64>> = inst.design.columns().to_vec();
        let sources: Vec<usize> = (0..inst.design.n_atoms()).collect();
        factor.append(&columns, &sources).unwrap();
        let projection = factor.project(&inst.response).unwrap();
        let residual_sq = empirical::norm_sq(&projection.residual);
        assert!(
            (residual_sq - inst.approximation_gap_sq).abs()
                <= 1e-9 * inst.approximation_gap_sq.max(1e-12),
            "gap {} but out-of-span energy {}",
            inst.approximation_gap_sq,
            residual_sq
        );
    }

    #[test]
    fn a_false_bound_is_reported_as_a_violation() {
        // Lie about the coefficient l1 norm: the bound becomes far too
        // strong and the checker must flag it.
        let mut inst = random_oracle_instance(23, "oracle/deliberately_wrong".into());
        inst.coefficient_l1 = 1e-12;
        inst.approximation_gap_sq = 0.0;
        let check = check_rate_instance(&inst, RateBound::Oracle);
        assert!(!check.pass);
        assert!(check.min_slack < -REL_TOL);
    }

    #[test]
    fn small_default_style_run_passes_and_tallies() {
        let mut checks = Vec::new();
        checks.extend(
            oracle_rate_instances(6, 1234)
                .iter()
                .map(|inst| check_rate_instance(inst, RateBound::Oracle)),
        );
        checks.extend(
            l1_ball_instances(6, 1235)
                .iter()
                .map(|inst| check_rate_instance(inst, RateBound::L1Ball)),
        );
        checks.extend(span_norm_suite(25, 1236));
        checks.extend(projection_norm_suite(25, 1237));
        let report = VerificationReport { checks };
        assert!(
            report.all_pass(),
            "violations: {:?}",
            report.violations()
        );
        let tallies = report.suite_tallies();
        assert_eq!(tallies.len(), 4);
        assert_eq!(tallies[0], ("oracle_rate", 6, 6));
        assert_eq!(tallies[2], ("span_norm", 25, 25));
    }

    #[test]
    fn report_csv_has_one_row_per_check() {
        let checks = span_norm_suite(4, 9);
        let report = VerificationReport { checks };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "suite,label,comparisons,min_slack,pass");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("span_norm,span_norm/random_0000,2,"));
        assert!(lines[1].ends_with(",true"));
    }
}
