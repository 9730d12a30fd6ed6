mod common;

use common::*;
use minsum::linalg::neg;
use proptest::prelude::*;
use rand::Rng;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn axioms_and_cauchy_schwarz(seed in any::<u64>(), d in 2usize..5) {
        let mut r = rng(seed);
        let g = any_gauge(&mut r, d);
        for _ in 0..20 {
            let x = vec_in(&mut r, d, 3.0);
            let y = vec_in(&mut r, d, 3.0);
            let lambda = r.gen_range(0.0..5.0);
            check_gauge_axioms(&g, &x, &y, lambda).map_err(TestCaseError::fail)?;
            let phi = vec_in(&mut r, d, 3.0);
            check_cauchy_schwarz(&g, &phi, &x).map_err(TestCaseError::fail)?;
        }
    }

    #[test]
    fn bipolar_and_opposite(seed in any::<u64>(), d in 2usize..5) {
        let mut r = rng(seed);
        let g = any_gauge(&mut r, d);
        let samples: Vec<Vec<f64>> = (0..30).map(|_| unit_vec(&mut r, d)).collect();
        for _ in 0..10 {
            let x = vec_in(&mut r, d, 3.0);
            check_bipolar(&g, &x, &samples).map_err(TestCaseError::fail)?;
            check_opposite_polar(&g, &x).map_err(TestCaseError::fail)?;
            check_norming_contract(&g, &x).map_err(TestCaseError::fail)?;
        }
        let o = g.opposite();
        for s in &samples {
            prop_assert!((o.eval(s) - g.eval(&neg(s))).abs() <= 1e-12 * (1.0 + o.eval(s)));
        }
    }

    #[test]
    fn asymmetry_ratio(seed in any::<u64>(), d in 2usize..4, k in 0usize..3, symmetric in any::<bool>()) {
        let mut r = rng(seed);
        let kind = [GaugeKind::H, GaugeKind::V, GaugeKind::Ellipsoid][k];
        let g = gauge_of(&mut r, d, kind, symmetric);
        let samples: Vec<Vec<f64>> = (0..200).map(|_| unit_vec(&mut r, d)).collect();
        check_asymmetry(&g, g.is_symmetric(), &samples).map_err(TestCaseError::fail)?;
        if symmetric {
            prop_assert!(g.is_symmetric());
        }
    }
}

#[test]
fn named_gauges_are_symmetric() {
    for d in 1..5 {
        for g in [
            minsum::Gauge::l1(d).unwrap(),
            minsum::Gauge::linf(d).unwrap(),
            minsum::Gauge::euclidean(d).unwrap(),
        ] {
            check_asymmetry(&g, true, &[]).unwrap();
        }
    }
}
