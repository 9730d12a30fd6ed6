mod common;

use common::*;
use minsum::ftcore::{solve, Method};
use minsum::io::parse_instance;
use minsum::oracle::{default_box, grid_minimize, GridSpec};
use proptest::prelude::*;

fn fixture(name: &str) -> String {
    let path = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect::<std::path::PathBuf>();
    std::fs::read_to_string(path).expect("fixture readable")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_moves_value_within_band(seed in any::<u64>(), d in 2usize..4, n in 1usize..4, levels in 1usize..3) {
        let mut r = rng(seed);
        let inst = mixed_instance(&mut r, d, n, false);
        let (lo, hi) = default_box(&inst);
        let res = if d == 2 { 16 } else { 6 };
        let coarse = grid_minimize(&inst, &GridSpec::new(lo.clone(), hi.clone(), res, levels).unwrap()).unwrap();
        let fine = grid_minimize(&inst, &GridSpec::new(lo, hi, res, levels + 1).unwrap()).unwrap();
        let band = coarse.cell_size * weighted_lipschitz(&inst);
        prop_assert!(fine.value <= coarse.value + band + 1e-12);
        prop_assert!(coarse.value <= fine.value + band + 1e-12);
    }

    #[test]
    fn oracle_brackets_lp(seed in any::<u64>(), d in 2usize..4, n in 2usize..5) {
        let mut r = rng(seed);
        let inst = mixed_instance(&mut r, d, n, true);
        let sol = solve(&inst).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(sol.method, Method::Lp);
        let out = oracle(&inst, if d == 2 { 5e-3 } else { 5e-2 });
        let band = out.cell_size * weighted_lipschitz(&inst);
        prop_assert!((out.value - sol.value).abs() <= band, "oracle {} vs LP {}", out.value, sol.value);
        prop_assert!(out.lower_bound <= sol.value + 1e-9);
    }
}

#[test]
fn oracle_matches_lp_on_fixtures() {
    for name in ["five_form_pair.json", "l1_triple_3d.json", "chebyshev_segments.json", "l1_pair.json"] {
        let inst = parse_instance(&fixture(name)).unwrap();
        let sol = solve(&inst).unwrap();
        assert_eq!(sol.method, Method::Lp, "{name}");
        // Two of these fixtures have two-dimensional minimizer sets, so the
        // near-optimal cell count grows like 1/cell².
        let out = oracle(&inst, 1e-2);
        let band = out.cell_size * weighted_lipschitz(&inst);
        assert!((out.value - sol.value).abs() <= band, "{name}: oracle {} vs LP {}", out.value, sol.value);
    }
}
