mod common;

use common::*;
use minsum::ftcore::{solve, Instance};
use minsum::geometry2d::{dseg_contains, dseg_polygon, ft_locus_polygon, sublevel_polygon, verify_extreme_point_form, Polygon, P2};
use minsum::linalg::axpy;
use minsum::Gauge;
use proptest::prelude::*;
use rand::Rng;

/// Edge midpoints of a polygon with their outward unit normals.
fn outward_probes(poly: &Polygon) -> Vec<(P2, P2)> {
    let v = poly.vertices();
    let n = v.len();
    let mut out = Vec::new();
    let edges = match n {
        0 | 1 => 0,
        2 => 2,
        _ => n,
    };
    for i in 0..edges {
        let (a, b) = if n == 2 { (v[i], v[1 - i]) } else { (v[i], v[(i + 1) % n]) };
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        out.push(([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0], [dy / len, -dx / len]));
    }
    out
}

fn shift(p: P2, t: f64, n: P2) -> Vec<f64> {
    vec![p[0] + t * n[0], p[1] + t * n[1]]
}

fn solved_points(r: &mut R, g: &Gauge, n: usize) -> Result<(Instance, Vec<f64>, f64, minsum::geometry2d::Locus), TestCaseError> {
    let inst = point_instance(r, g, n, 3.0);
    let sol = solve(&inst).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let cert = sol.certificate.clone().expect("solver certifies");
    let locus = ft_locus_polygon(&inst, &sol.point, &cert, 1e-7).map_err(|e| TestCaseError::fail(e.to_string()))?;
    Ok((inst, sol.point, sol.value, locus))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dsegment_contains_segment(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = vec_in(&mut r, 2, 3.0);
        let y = vec_in(&mut r, 2, 3.0);
        let any = any_gauge(&mut r, 2);
        for k in 0..=10 {
            let z = axpy(&x, k as f64 / 10.0, &minsum::linalg::sub(&y, &x));
            prop_assert!(dseg_contains(&any, &x, &y, &z, 1e-9).unwrap());
        }
        let g = polytope_gauge(&mut r, 2);
        let poly = dseg_polygon(&g, &x, &y).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for k in 0..=10 {
            let z = axpy(&x, k as f64 / 10.0, &minsum::linalg::sub(&y, &x));
            prop_assert!(dseg_contains(&g, &x, &y, &z, 1e-9).unwrap());
            prop_assert!(poly.contains([z[0], z[1]], 1e-9));
        }
        for v in poly.vertices() {
            prop_assert!(dseg_contains(&g, &x, &y, v, 1e-9).unwrap());
        }
        for (m, n) in outward_probes(&poly) {
            if poly.vertices().len() >= 3 {
                prop_assert!(dseg_contains(&g, &x, &y, &shift(m, -1e-4, n), 1e-12).unwrap());
            }
            prop_assert!(!dseg_contains(&g, &x, &y, &shift(m, 1e-4, n), 1e-12).unwrap());
        }
    }

    #[test]
    fn locus_is_exact(seed in any::<u64>(), n in 2usize..6) {
        let mut r = rng(seed);
        let g = polytope_gauge(&mut r, 2);
        let (inst, _, value, locus) = solved_points(&mut r, &g, n)?;
        let poly = &locus.polygon;
        prop_assert!(poly.is_bounded());
        let tol = 1e-7 * (1.0 + value);
        for p in poly.sample_points() {
            prop_assert!(inst.objective(&p) <= value + tol, "sample {p:?} not optimal");
        }
        let probes = match poly.vertices().len() {
            1 => (0..8)
                .map(|k| {
                    let a = k as f64 * std::f64::consts::FRAC_PI_4;
                    (poly.vertices()[0], [a.cos(), a.sin()])
                })
                .collect(),
            _ => outward_probes(poly),
        };
        for (m, nrm) in probes {
            let out = shift(m, 1e-2, nrm);
            prop_assert!(inst.objective(&out) > value + tol, "{out:?} outside the locus is optimal");
        }
        let sub = sublevel_polygon(&inst, value).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(sub.hausdorff(poly) <= 1e-6 * (1.0 + value), "hausdorff {}", sub.hausdorff(poly));
    }

    #[test]
    fn sublevel_vertices_have_extreme_form(seed in any::<u64>(), n in 1usize..5, lift in 0.01f64..3.0) {
        let mut r = rng(seed);
        let g = polytope_gauge(&mut r, 2);
        let mut inst = point_instance(&mut r, &g, n, 3.0);
        if r.gen_bool(0.5) {
            let sites: Vec<_> = inst
                .sites()
                .iter()
                .map(|s| minsum::ftcore::Site::new(s.set.clone(), s.gauge.clone(), r.gen_range(0.5..2.0)))
                .collect();
            inst = Instance::new(2, sites, None).unwrap();
        }
        let value = solve(&inst).map_err(|e| TestCaseError::fail(e.to_string()))?.value;
        let alpha = value + lift;
        let poly = sublevel_polygon(&inst, alpha).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(poly.vertices().len() >= 3);
        for v in poly.vertices() {
            prop_assert!((inst.objective(v) - alpha).abs() <= 1e-7 * (1.0 + alpha));
            let w = verify_extreme_point_form(&inst, alpha, v).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert!(w.is_some(), "vertex {v:?} lacks the extreme-point form");
        }
    }
}

