mod common;

use common::*;
use entropy_dichotomy::classify::{Tolerance, VectorClass};
use entropy_dichotomy::exploit::{
    analyze_systems, convex_combine, ideal_lambda, liu_multipliers, sample_flat, sigma_range,
    solve_balance, AnalysisOptions, SigmaRange, Verdict,
};
use entropy_dichotomy::kernel::HigherVector;
use entropy_dichotomy::par::Execution;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solution_set_invariants(seed in any::<u64>(), compliant in any::<bool>()) {
        let mut rng = rng(seed);
        let st = random_structure(&mut rng, compliant);
        let sols = solve_balance(&st.bs, 1e-9).unwrap();
        let scale = 1.0 + st.bs.a.amax() * (1.0 + sols.particular.amax()) + st.bs.c.amax();
        prop_assert!(residual_loop(&st.bs.a, &st.bs.c, &sols.particular) <= 1e-10 * scale);
        prop_assert!((&st.bs.a * &sols.nullspace).amax() <= 1e-10 * (1.0 + st.bs.a.amax()));
        let gram = sols.nullspace.transpose() * &sols.nullspace;
        let eye = DMatrix::<f64>::identity(sols.nullity(), sols.nullity());
        prop_assert!((gram - eye).amax() <= 1e-10);
        prop_assert_eq!(sols.nullity(), st.null.len());
        prop_assert_eq!(sols.rank + sols.nullity(), st.bs.layout.higher_dim());
    }

    #[test]
    fn liu_agrees_with_range(seed in any::<u64>(), compliant in any::<bool>()) {
        let mut rng = rng(seed);
        let st = random_structure(&mut rng, compliant);
        let sols = solve_balance(&st.bs, 1e-9).unwrap();
        let liu = liu_multipliers(&st.bs, &st.es, 1e-9).unwrap();
        let range = sigma_range(&st.es, &sols, 1e-9).unwrap();
        match range {
            SigmaRange::Constant { value } => {
                prop_assert!(liu.in_row_space);
                prop_assert!((value - liu.residual_production).abs() <= 1e-8 * (1.0 + value.abs()));
                if compliant {
                    prop_assert!((value - st.slack).abs() <= 1e-8 * (1.0 + st.slack));
                }
            }
            SigmaRange::UnboundedBothSides { slope, .. } => {
                prop_assert!(!liu.in_row_space);
                prop_assert!(!compliant);
                prop_assert!(slope > 0.0);
            }
        }
    }

    #[test]
    fn ideal_combination_on_solution_set(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let st = random_structure(&mut rng, false);
        prop_assume!(!st.null.is_empty());
        let ys: Vec<DVector<f64>> = (0..64).map(|_| st.draw(&mut rng, 10.0)).collect();
        let s = |y: &DVector<f64>| sigma_loop(&st.es.b, st.es.d, y);
        let pos = ys.iter().find(|y| s(y) > 1e-6);
        let neg = ys.iter().find(|y| s(y) < -1e-6);
        prop_assume!(pos.is_some() && neg.is_some());
        let l = st.bs.layout;
        let y1 = HigherVector::unpack(pos.unwrap().as_slice(), l).unwrap();
        let y2 = HigherVector::unpack(neg.unwrap().as_slice(), l).unwrap();
        let lambda = ideal_lambda(&st.es, &y1, &y2, Tolerance::Relative(1e-9)).unwrap();
        prop_assert!(lambda > 0.0 && lambda < 1.0);
        let y3 = DVector::from_vec(convex_combine(&y1, &y2, lambda).unwrap().pack());
        let scale = st.scale(&y3).max(st.scale(pos.unwrap())).max(st.scale(neg.unwrap()));
        prop_assert!(s(&y3).abs() <= 1e-10 * scale);
        prop_assert!(residual_loop(&st.bs.a, &st.bs.c, &y3) <= 1e-10 * scale);
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), k in 1usize..50) {
        let mut rng = rng(seed);
        let st = random_structure(&mut rng, false);
        let sols = solve_balance(&st.bs, 1e-9).unwrap();
        let a = sample_flat(&sols, k, 2.0, seed, Execution::Sequential);
        let b = sample_flat(&sols, k, 2.0, seed, Execution::default());
        prop_assert_eq!(&a, &b);
        let prefix = sample_flat(&sols, 1, 2.0, seed, Execution::Sequential);
        prop_assert_eq!(&prefix[0], &a[0]);
    }
}

#[test]
fn compliant_verdict_follows_slack() {
    let mut rng = rng(31);
    let opts = AnalysisOptions { samples: 500, ..AnalysisOptions::default() };
    for _ in 0..40 {
        let st = random_structure(&mut rng, true);
        let r = analyze_systems(&st.bs, &st.es, &opts).unwrap();
        let expect = if st.slack > 0.0 {
            Verdict::AdmissibleNonequilibrium
        } else {
            Verdict::AdmissibleEquilibrium
        };
        assert_eq!(r.verdict, expect, "slack {}", st.slack);
        let c = r.samples.classes;
        assert_eq!(c.total(), 500);
        assert!(c.real == 500 || c.ideal == 500);
    }
}

#[test]
fn negative_slack_is_inadmissible_negative() {
    let mut rng = rng(32);
    let opts = AnalysisOptions { samples: 100, ..AnalysisOptions::default() };
    for _ in 0..20 {
        let mut st = random_structure(&mut rng, true);
        st.es.d += 2.0 * st.slack + 1.0;
        let r = analyze_systems(&st.bs, &st.es, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::InadmissibleNegative);
        assert_eq!(r.samples.classes.over_ideal, 100);
    }
}

#[test]
fn mixed_witness_is_sound() {
    let mut rng = rng(33);
    let opts = AnalysisOptions { samples: 200, ..AnalysisOptions::default() };
    let mut seen = 0;
    for _ in 0..40 {
        let st = random_structure(&mut rng, false);
        let r = analyze_systems(&st.bs, &st.es, &opts).unwrap();
        if r.verdict != Verdict::InadmissibleMixed {
            continue;
        }
        seen += 1;
        let w = r.witness.unwrap();
        let tol = |y: &[f64]| Tolerance::Relative(1e-9).resolve(&st.es, DVector::from_column_slice(y).amax());
        assert_eq!(VectorClass::of(w.sigma_real, tol(&w.y_real)), VectorClass::Real);
        assert_eq!(VectorClass::of(w.sigma_over_ideal, tol(&w.y_over_ideal)), VectorClass::OverIdeal);
        assert!(w.lambda > 0.0 && w.lambda < 1.0);
        let y3 = DVector::from_column_slice(&w.y_ideal);
        assert!(sigma_loop(&st.es.b, st.es.d, &y3).abs() <= 1e-10 * st.scale(&y3));
        assert!(residual_loop(&st.bs.a, &st.bs.c, &y3) <= 1e-10 * st.scale(&y3));
    }
    assert!(seen > 20);
}
