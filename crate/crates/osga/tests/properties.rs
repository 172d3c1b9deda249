//! Property tests for the scalar primitives and selection rules.

use ndarray::Array1;
use osga::baselines::{half_threshold, soft_threshold};
use osga::datagen::{sample_train, TargetFunction};
use osga::dictionary::max_step_size;
use osga::empirical;
use osga::greedy::truncate;
use proptest::prelude::*;

proptest! {
    #[test]
    fn truncation_never_exceeds_the_level(v in -1e6_f64..1e6, level in 0.0_f64..1e3) {
        let t = truncate(v, level);
        prop_assert!(t.abs() <= level);
        prop_assert!(t == 0.0 || t.signum() == v.signum());
    }

    #[test]
    fn truncation_is_idempotent(v in -1e6_f64..1e6, level in 0.0_f64..1e3) {
        let t = truncate(v, level);
        prop_assert_eq!(truncate(t, level), t);
    }

    #[test]
    fn truncation_is_a_contraction(
        u in -1e4_f64..1e4,
        v in -1e4_f64..1e4,
        level in 0.0_f64..1e3,
    ) {
        let d = (truncate(u, level) - truncate(v, level)).abs();
        prop_assert!(d <= (u - v).abs() + 1e-12);
    }

    #[test]
    fn soft_threshold_magnitude_is_exact(x in -1e4_f64..1e4, t in 0.0_f64..1e3) {
        let out = soft_threshold(x, t);
        let want = (x.abs() - t).max(0.0);
        prop_assert!((out.abs() - want).abs() <= 1e-12 * (1.0 + want));
        prop_assert!(out == 0.0 || out.signum() == x.signum());
    }

    #[test]
    fn soft_threshold_is_odd(x in -1e4_f64..1e4, t in 0.0_f64..1e3) {
        prop_assert_eq!(soft_threshold(-x, t), -soft_threshold(x, t));
    }

    #[test]
    fn half_threshold_shrinks_and_keeps_sign(x in -100.0_f64..100.0, t in 1e-6_f64..10.0) {
        let out = half_threshold(x, t);
        prop_assert!(out.abs() <= x.abs() + 1e-12);
        prop_assert!(out == 0.0 || out.signum() == x.signum());
        // Survivors clear the dead zone around zero.
        if out != 0.0 {
            prop_assert!(out.abs() >= (t / 4.0).powf(2.0 / 3.0) - 1e-12);
        }
    }

    #[test]
    fn step_budget_shrinks_as_coherence_grows(a in 1e-4_f64..1.0, b in 1e-4_f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(max_step_size(lo) >= max_step_size(hi));
    }

    #[test]
    fn step_budget_satisfies_the_admissibility_inequality(m in 1e-4_f64..1.0) {
        let s = max_step_size(m);
        prop_assert!((s as f64 - 1.0) * 2.0 * m <= 1.0 + 1e-6);
        prop_assert!(((s + 1) as f64 - 1.0) * 2.0 * m > 1.0);
    }

    #[test]
    fn empirical_inner_product_satisfies_cauchy_schwarz(
        u in prop::collection::vec(-100.0_f64..100.0, 1..40),
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = u.len();
        let u = Array1::from_vec(u);
        let v = Array1::from_shape_fn(n, |_| 200.0 * rng.random::<f64>() - 100.0);
        let lhs = empirical::dot(&u, &v).abs();
        let rhs = empirical::norm(&u) * empirical::norm(&v);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn piecewise_target_stays_in_its_range(x in 0.0_f64..=1.0) {
        let v = TargetFunction::F2.eval(x).unwrap();
        prop_assert!((-1.0..=4.0 / 9.0 + 1e-15).contains(&v));
    }

    #[test]
    fn training_samples_are_reproducible_and_in_range(seed in any::<u64>()) {
        let a = sample_train(&TargetFunction::F1, 30, 0.1, seed).unwrap();
        let b = sample_train(&TargetFunction::F1, 30, 0.1, seed).unwrap();
        prop_assert_eq!(&a.inputs, &b.inputs);
        prop_assert_eq!(&a.targets, &b.targets);
        for &x in a.inputs.iter() {
            prop_assert!(x > 0.0 && x < 1.0);
        }
    }
}
