use std::sync::Arc;

use bml::risk::{exact_gaussian_risk, upper_exponent};
use bml::solvers::{hard_margin_svm_default, min_norm_interpolator, sv_proliferation_predicate, Verdict};
use bml::{sample_dataset, CovarianceSpec, EntryDist, MeanSpec, MixtureModel};
use nalgebra::DVector;
use proptest::prelude::*;

fn poly_model(d: usize, alpha: f64, r: f64, seed: u64) -> MixtureModel {
    let cov = CovarianceSpec::polynomial_spectrum(d, alpha).unwrap();
    MixtureModel::new(Arc::new(cov), MeanSpec::UniformSphere { r, seed }, EntryDist::Gaussian).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn svm_norm_never_exceeds_interpolator_norm(
        n in 2usize..10, extra in 0usize..20, alpha in 0.0f64..0.9, r in 0.0f64..3.0, seed in any::<u64>()
    ) {
        let d = n + extra;
        let ds = sample_dataset(&poly_model(d, alpha, r, seed), n, seed ^ 1).unwrap();
        let ls = min_norm_interpolator(&ds).unwrap();
        let svm = hard_margin_svm_default(&ds).unwrap();
        prop_assert!(svm.norm() <= ls.norm() * (1.0 + 1e-12));
        if let Ok(v) = sv_proliferation_predicate(&ds, None) {
            let same = (ls.norm() - svm.norm()).abs() <= 1e-8 * ls.norm();
            match v.verdict {
                Verdict::Equal => prop_assert!(same),
                Verdict::NotEqual => prop_assert!(!same),
                Verdict::Marginal => {}
            }
        }
    }

    #[test]
    fn svm_dual_is_feasible_and_margins_reach_one(
        n in 2usize..10, extra in 0usize..20, r in 0.0f64..3.0, seed in any::<u64>()
    ) {
        let ds = sample_dataset(&poly_model(n + extra, 0.3, r, seed), n, seed ^ 2).unwrap();
        let svm = hard_margin_svm_default(&ds).unwrap();
        let m = svm.margins(&ds);
        let min = m.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!((min - 1.0).abs() <= 1e-7);
    }

    #[test]
    fn predicate_verdict_is_scale_invariant(
        n in 2usize..10, extra in 0usize..20, r in 0.0f64..3.0, seed in any::<u64>(), c in 0.01f64..100.0
    ) {
        let ds = sample_dataset(&poly_model(n + extra, 0.0, r, seed), n, seed ^ 3).unwrap();
        if let Ok(v) = sv_proliferation_predicate(&ds, None) {
            let vc = sv_proliferation_predicate(&ds.scaled(c), None).unwrap();
            prop_assert_eq!(v.verdict, vc.verdict);
        }
    }

    #[test]
    fn exact_risk_is_scale_invariant_and_bounded(
        d in 1usize..30, alpha in 0.0f64..0.9, r in 0.0f64..4.0, seed in any::<u64>(),
        c in 1e-3f64..1e3, coords in prop::collection::vec(-1.0f64..1.0, 30)
    ) {
        let m = poly_model(d, alpha, r, seed);
        let theta = DVector::from_iterator(d, coords.into_iter().take(d));
        prop_assume!(theta.norm() > 1e-6);
        let a = exact_gaussian_risk(&theta, &m).unwrap();
        let b = exact_gaussian_risk(&(&theta * c), &m).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a - b).abs() <= 1e-14);
    }

    #[test]
    fn upper_exponent_grows_with_mean_and_shrinks_with_dimension(
        n in 1usize..200, d in 1usize..500, r in 0.1f64..5.0
    ) {
        let small = poly_model(d, 0.0, r, 1).summaries();
        let big = poly_model(d, 0.0, 2.0 * r, 1).summaries();
        let wide = poly_model(2 * d, 0.0, r, 1).summaries();
        let e = upper_exponent(n, &small);
        prop_assert!(upper_exponent(n, &big) > e);
        prop_assert!(upper_exponent(n, &wide) < e);
    }
}
