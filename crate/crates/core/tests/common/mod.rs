//! Random generators and property checks shared by the property suites and
//! the acceptance runner. Each check returns `Err` with a description on
//! violation.

#![allow(dead_code)]

use minsum::euclid::{self, EuclidInstance};
use minsum::ftcore::{find_certificate, solve, Instance, Site};
use minsum::gauge::NormingSet;
use minsum::linalg::{add, axpy, dist, dot, neg, norm, orthonormalize, scale, sub};
use minsum::lp::{Cmp, Lp};
use minsum::oracle::{default_box, grid_minimize, GridSpec, OracleResult};
use minsum::{ConvexSet, Gauge};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type R = ChaCha8Rng;

pub fn rng(seed: u64) -> R {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn vec_in(rng: &mut R, d: usize, r: f64) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-r..r)).collect()
}

pub fn unit_vec(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v = vec_in(rng, d, 1.0);
        let n = norm(&v);
        if n > 0.1 && n <= 1.0 {
            return scale(&v, 1.0 / n);
        }
    }
}

fn random_rotation(rng: &mut R, d: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < d {
        let mut v = unit_vec(rng, d);
        for b in &q {
            v = axpy(&v, -dot(&v, b), b);
        }
        let n = norm(&v);
        if n > 0.2 {
            q.push(scale(&v, 1.0 / n));
        }
    }
    q
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeKind {
    H,
    V,
    Ellipsoid,
    L1,
    Linf,
    Euclidean,
}

pub const ALL_KINDS: [GaugeKind; 6] = [
    GaugeKind::H,
    GaugeKind::V,
    GaugeKind::Ellipsoid,
    GaugeKind::L1,
    GaugeKind::Linf,
    GaugeKind::Euclidean,
];

pub const POLYTOPE_KINDS: [GaugeKind; 4] = [GaugeKind::H, GaugeKind::V, GaugeKind::L1, GaugeKind::Linf];

/// Random gauge of the given kind; `symmetric` mirrors the generators.
pub fn gauge_of(rng: &mut R, d: usize, kind: GaugeKind, symmetric: bool) -> Gauge {
    loop {
        let g = match kind {
            GaugeKind::H | GaugeKind::V => {
                let m = rng.gen_range(d + 1..d + 6);
                let mut rows: Vec<Vec<f64>> = (0..m)
                    .map(|_| scale(&unit_vec(rng, d), rng.gen_range(0.4..2.0)))
                    .collect();
                if symmetric {
                    let mirrored: Vec<Vec<f64>> = rows.iter().map(|r| neg(r)).collect();
                    rows.extend(mirrored);
                }
                if kind == GaugeKind::H {
                    Gauge::hpolytope(rows)
                } else {
                    Gauge::vpolytope(rows)
                }
            }
            GaugeKind::Ellipsoid => {
                let q = random_rotation(rng, d);
                let s: Vec<f64> = (0..d).map(|_| rng.gen_range(0.4..2.0)).collect();
                let mat = |f: &dyn Fn(f64) -> f64| -> Vec<Vec<f64>> {
                    (0..d)
                        .map(|i| (0..d).map(|j| (0..d).map(|k| q[k][i] * f(s[k]) * q[k][j]).sum()).collect())
                        .collect()
                };
                let a = mat(&|x| x);
                let a_inv = mat(&|x| 1.0 / x);
                let center = if symmetric {
                    vec![0.0; d]
                } else {
                    let u = scale(&unit_vec(rng, d), rng.gen_range(0.1..0.7));
                    (0..d).map(|i| dot(&a_inv[i], &u)).collect()
                };
                let a = (0..d)
                    .map(|i| (0..d).map(|j| 0.5 * (a[i][j] + a[j][i])).collect())
                    .collect();
                Gauge::ellipsoid(a, center)
            }
            GaugeKind::L1 => Gauge::l1(d),
            GaugeKind::Linf => Gauge::linf(d),
            GaugeKind::Euclidean => Gauge::euclidean(d),
        };
        if let Ok(g) = g {
            return g;
        }
    }
}

pub fn any_gauge(rng: &mut R, d: usize) -> Gauge {
    let kind = ALL_KINDS[rng.gen_range(0..ALL_KINDS.len())];
    let sym = rng.gen_bool(0.3);
    gauge_of(rng, d, kind, sym)
}

pub fn polytope_gauge(rng: &mut R, d: usize) -> Gauge {
    let kind = POLYTOPE_KINDS[rng.gen_range(0..POLYTOPE_KINDS.len())];
    let sym = rng.gen_bool(0.3);
    gauge_of(rng, d, kind, sym)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetKind {
    Point,
    Segment,
    Polytope,
    Flat,
    Ball,
}

pub fn set_of(rng: &mut R, d: usize, kind: SetKind, spread: f64) -> ConvexSet {
    let c = vec_in(rng, d, spread);
    match kind {
        SetKind::Point => ConvexSet::point(c).unwrap(),
        SetKind::Segment => {
            let h = scale(&unit_vec(rng, d), rng.gen_range(0.2..1.5));
            ConvexSet::segment(add(&c, &h), sub(&c, &h)).unwrap()
        }
        SetKind::Polytope => loop {
            // Full-dimensional and not too thin.
            let m = rng.gen_range(d + 1..d + 4);
            let vs: Vec<Vec<f64>> = (0..m).map(|_| add(&c, &vec_in(rng, d, 1.0))).collect();
            let diffs: Vec<Vec<f64>> = vs[1..=d].iter().map(|v| sub(v, &vs[0])).collect();
            if orthonormalize(&diffs, 0.3).is_some() {
                break ConvexSet::polytope(vs).unwrap();
            }
        },
        SetKind::Flat => {
            let k = rng.gen_range(1..d);
            let q = random_rotation(rng, d);
            ConvexSet::flat(c, q[..k].to_vec()).unwrap()
        }
        SetKind::Ball => ConvexSet::ball(c, rng.gen_range(0.2..1.0)).unwrap(),
    }
}

pub fn any_set(rng: &mut R, d: usize, spread: f64) -> ConvexSet {
    let kinds = [SetKind::Point, SetKind::Segment, SetKind::Polytope, SetKind::Flat, SetKind::Ball];
    let kind = kinds[rng.gen_range(0..kinds.len())];
    set_of(rng, d, kind, spread)
}

pub fn bounded_polyhedral_set(rng: &mut R, d: usize, spread: f64) -> ConvexSet {
    let kinds = [SetKind::Point, SetKind::Segment, SetKind::Polytope];
    let kind = kinds[rng.gen_range(0..kinds.len())];
    set_of(rng, d, kind, spread)
}

/// Random polyhedral instance with a generic asymmetric polytope gauge per
/// site and at least three sites, so that the minimizer is isolated.
pub fn generic_polyhedral(rng: &mut R, d: usize) -> Instance {
    let n = rng.gen_range(3..6);
    let sites = (0..n)
        .map(|_| {
            let kind = if rng.gen_bool(0.5) { GaugeKind::H } else { GaugeKind::V };
            let g = gauge_of(rng, d, kind, false);
            let set = bounded_polyhedral_set(rng, d, 3.0);
            Site::new(set, g, rng.gen_range(0.5..2.0))
        })
        .collect();
    Instance::new(d, sites, None).unwrap()
}

/// A random point of `K`, kept away from the relative boundary of polytopes
/// and balls.
pub fn point_in(rng: &mut R, k: &ConvexSet) -> Vec<f64> {
    match k {
        ConvexSet::Singleton(p) => p.clone(),
        ConvexSet::VPolytope(vs) => {
            let w: Vec<f64> = vs.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = w.iter().sum();
            vs.iter()
                .zip(&w)
                .fold(vec![0.0; vs[0].len()], |acc, (v, wi)| axpy(&acc, wi / s, v))
        }
        ConvexSet::Flat(f) => f
            .basis()
            .iter()
            .fold(f.base().to_vec(), |acc, b| axpy(&acc, rng.gen_range(-3.0..3.0), b)),
        ConvexSet::Ball { center, radius } => {
            let d = center.len();
            let r = 0.9 * radius * rng.gen_range(0.0..1.0f64).powf(1.0 / d as f64);
            axpy(center, r, &unit_vec(rng, d))
        }
    }
}

/// Mixed instance: `n` sites with random sets and gauges, weights in [½, 2],
/// at least one bounded site.
pub fn mixed_instance(rng: &mut R, d: usize, n: usize, polyhedral: bool) -> Instance {
    let sites: Vec<Site> = (0..n)
        .map(|i| {
            let set = match (polyhedral, i) {
                (true, _) => bounded_polyhedral_set(rng, d, 3.0),
                (false, 0) => set_of(rng, d, SetKind::Point, 3.0),
                (false, _) => any_set(rng, d, 3.0),
            };
            let gauge = if polyhedral { polytope_gauge(rng, d) } else { any_gauge(rng, d) };
            Site::new(set, gauge, rng.gen_range(0.5..2.0))
        })
        .collect();
    Instance::new(d, sites, None).unwrap()
}

pub fn point_instance(rng: &mut R, g: &Gauge, n: usize, spread: f64) -> Instance {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| vec_in(rng, g.dim(), spread)).collect();
    Instance::points(g, &pts).unwrap()
}

pub fn weighted_lipschitz(inst: &Instance) -> f64 {
    inst.sites().iter().map(|s| s.weight * s.gauge.lipschitz()).sum()
}

pub fn oracle(inst: &Instance, target_cell: f64) -> OracleResult {
    let (lo, hi) = default_box(inst);
    let res = if inst.dim() == 2 { 24 } else { 8 };
    let spec = GridSpec::with_target_cell(lo, hi, res, target_cell).unwrap();
    grid_minimize(inst, &spec).unwrap()
}

// ---- gauges ----

pub fn check_gauge_axioms(g: &Gauge, x: &[f64], y: &[f64], lambda: f64) -> Result<(), String> {
    let gx = g.eval(x);
    let hom = g.eval(&scale(x, lambda));
    ensure((hom - lambda * gx).abs() <= 1e-9 * (1.0 + gx) * lambda.max(1.0), || {
        format!("homogeneity: γ(λx) = {hom}, λγ(x) = {}", lambda * gx)
    })?;
    let sum = g.eval(&add(x, y));
    ensure(sum <= gx + g.eval(y) + 1e-9, || format!("subadditivity: {sum} > {} + {}", gx, g.eval(y)))?;
    ensure(norm(x) == 0.0 || gx > 0.0, || format!("positivity fails at {x:?}"))
}

pub fn check_cauchy_schwarz(g: &Gauge, phi: &[f64], x: &[f64]) -> Result<(), String> {
    let gx = g.eval(x);
    let upper = g.polar(phi) * gx;
    let lower = -g.polar(&neg(phi)) * gx;
    let p = dot(phi, x);
    let tol = 1e-9 * (1.0 + upper.abs() + lower.abs());
    ensure(lower - tol <= p && p <= upper + tol, || format!("{lower} ≤ {p} ≤ {upper} fails"))
}

/// `γ(x)` is the maximum of `⟨φ, x⟩` over the polar ball: exact over the
/// facet functionals of polytopes, attained by the norming functional, and
/// never exceeded by sampled polar-sphere points.
pub fn check_bipolar(g: &Gauge, x: &[f64], samples: &[Vec<f64>]) -> Result<(), String> {
    let gx = g.eval(x);
    if g.is_polytope() {
        let m = g.facets().iter().map(|a| dot(a, x)).fold(f64::NEG_INFINITY, f64::max);
        ensure((m - gx).abs() <= 1e-7 * (1.0 + gx), || format!("facet max {m} vs γ(x) {gx}"))?;
    }
    let nf = g.norming_functional(x);
    ensure((dot(&nf, x) - gx).abs() <= 1e-9 * (1.0 + gx), || {
        format!("norming functional value {} vs {gx}", dot(&nf, x))
    })?;
    for s in samples {
        let phi = scale(s, 1.0 / g.polar(s));
        ensure(dot(&phi, x) <= gx + 1e-9 * (1.0 + gx), || format!("polar point {phi:?} exceeds γ(x)"))?;
    }
    Ok(())
}

pub fn check_opposite_polar(g: &Gauge, phi: &[f64]) -> Result<(), String> {
    let a = g.opposite().polar(phi);
    let b = g.polar(&neg(phi));
    ensure((a - b).abs() <= 1e-12 * (1.0 + b.abs()), || format!("opposite polar {a} vs {b}"))
}

pub fn check_norming_contract(g: &Gauge, x: &[f64]) -> Result<(), String> {
    let gx = g.eval(x);
    let NormingSet::Hull(phis) = g.norming_functionals(x).map_err(|e| e.to_string())? else {
        return Err("nonzero x produced the whole polar ball".into());
    };
    ensure(!phis.is_empty(), || "no norming functional".into())?;
    for phi in phis {
        ensure((g.polar(&phi) - 1.0).abs() <= 1e-7, || format!("γ°(φ) = {}", g.polar(&phi)))?;
        ensure((dot(&phi, x) - gx).abs() <= 1e-7 * (1.0 + gx), || format!("⟨φ,x⟩ = {} vs {gx}", dot(&phi, x)))?;
    }
    Ok(())
}

/// Ratio 1 exactly for balls equal to their negation, above 1 otherwise;
/// the reported ratio is attained at the witness and dominates samples.
pub fn check_asymmetry(g: &Gauge, symmetric: bool, samples: &[Vec<f64>]) -> Result<(), String> {
    let (x0, ratio) = g.asymmetry_witness();
    let at = g.eval(&neg(&x0)) / g.eval(&x0);
    ensure((at - ratio).abs() <= 1e-9 * ratio, || format!("witness ratio {at} vs reported {ratio}"))?;
    for s in samples {
        let r = g.eval(&neg(s)) / g.eval(s);
        ensure(r <= ratio + 1e-9, || format!("sample ratio {r} exceeds {ratio}"))?;
    }
    ensure(((ratio - 1.0).abs() <= 1e-9) == symmetric, || {
        format!("ratio {ratio} but symmetric = {symmetric}")
    })
}

// ---- sets ----

pub fn check_projection(rng: &mut R, g: &Gauge, k: &ConvexSet, x: &[f64]) -> Result<(), String> {
    let p = k.set_distance(g, x).map_err(|e| e.to_string())?;
    let scale_v = 1.0 + p.value;
    ensure(k.contains(&p.witness, 1e-7 * (1.0 + norm(x))).unwrap(), || "witness outside K".into())?;
    let direct = g.eval(&sub(&p.witness, x));
    ensure((direct - p.value).abs() <= 1e-7 * scale_v, || format!("γ(w − x) = {direct} vs {}", p.value))?;
    for _ in 0..50 {
        let y = point_in(rng, k);
        let v = g.eval(&sub(&y, x));
        ensure(v >= p.value - 1e-7 * scale_v, || format!("sample {y:?} gives {v} < {}", p.value))?;
    }
    Ok(())
}

/// Support value of `{φ : ⟨φ, c_k⟩ ≤ 0, γ°(−φ) ≤ 1}` at `x` for a polytope
/// gauge, by LP over the polar-ball vertices (the facet functionals).
pub fn cone_polar_support(g: &Gauge, gens: &[Vec<f64>], x: &[f64]) -> f64 {
    let a = g.facets();
    let mut lp = Lp::new();
    let mu = lp.add_vars(a.len(), false);
    // φ = −Σ μ_j a_j, maximize ⟨φ, x⟩.
    for (&j, aj) in mu.iter().zip(a) {
        lp.set_cost(j, dot(aj, x));
    }
    lp.add_row(mu.iter().map(|&j| (j, 1.0)).collect(), Cmp::Le, 1.0);
    for c in gens {
        lp.add_row(mu.iter().zip(a).map(|(&j, aj)| (j, -dot(aj, c))).collect(), Cmp::Le, 0.0);
    }
    let sol = lp.solve().optimal().expect("bounded feasible LP");
    -sol.value
}

/// Distance to the cone spanned by `gens`, modeled as a large simplex, equals
/// the support value of the polar-cone intersection.
pub fn check_cone_distance(g: &Gauge, gens: &[Vec<f64>], x: &[f64]) -> Result<(), String> {
    let d = x.len();
    let big = 1e3;
    let mut verts = vec![vec![0.0; d]];
    verts.extend(gens.iter().map(|c| scale(c, big)));
    let k = ConvexSet::polytope(verts).unwrap();
    let lhs = k.set_distance(g, x).map_err(|e| e.to_string())?.value;
    let rhs = cone_polar_support(g, gens, x);
    ensure((lhs - rhs).abs() <= 1e-6 * (1.0 + lhs), || format!("dist {lhs} vs support {rhs}"))
}

/// Maximizer of `⟨φ, x − r⟩` over `U⊥ ∩ {γ°(−φ) ≤ 1}` (polytope gauge).
pub fn flat_dual_maximizer(g: &Gauge, k: &ConvexSet, x: &[f64]) -> Vec<f64> {
    let ConvexSet::Flat(f) = k else { panic!("flat expected") };
    let a = g.facets();
    let rel = sub(x, f.base());
    let mut lp = Lp::new();
    let mu = lp.add_vars(a.len(), false);
    for (&j, aj) in mu.iter().zip(a) {
        lp.set_cost(j, dot(aj, &rel));
    }
    lp.add_row(mu.iter().map(|&j| (j, 1.0)).collect(), Cmp::Le, 1.0);
    for u in f.basis() {
        lp.add_row(mu.iter().zip(a).map(|(&j, aj)| (j, dot(aj, u))).collect(), Cmp::Eq, 0.0);
    }
    let sol = lp.solve().optimal().expect("bounded feasible LP");
    let mut phi = vec![0.0; x.len()];
    for (&j, aj) in mu.iter().zip(a) {
        phi = axpy(&phi, -sol.x[j], aj);
    }
    phi
}

/// Membership in `∂dist(·, K)(x)` for an affine flat agrees with the three
/// explicit conditions; borderline candidates are skipped.
pub fn check_flat_subdifferential(g: &Gauge, k: &ConvexSet, x: &[f64], phi: &[f64]) -> Result<(), String> {
    let ConvexSet::Flat(f) = k else { panic!("flat expected") };
    let dist_v = k.distance(g, x).value;
    let orth = f.basis().iter().map(|u| dot(u, phi).abs()).fold(0.0, f64::max);
    let polar = g.polar(&neg(phi));
    let level = (dist_v - dot(phi, &sub(x, f.base()))).abs();
    let tight = 1e-7;
    let explicit = orth <= tight && polar <= 1.0 + tight && level <= tight * (1.0 + dist_v);
    let clearly_out = orth > 1e-4 || polar > 1.0 + 1e-4 || level > 1e-4 * (1.0 + dist_v);
    if !explicit && !clearly_out {
        return Ok(());
    }
    let accepted = k.dist_subdifferential_contains(g, x, phi, 1e-7).map_err(|e| e.to_string())?;
    ensure(accepted == explicit, || {
        format!("accepted = {accepted}, explicit = {explicit} (orth {orth}, polar {polar}, level {level})")
    })
}

/// Fenchel–Young equality and the subgradient inequality at `probes` for
/// accepted subgradients.
pub fn check_conjugate(g: &Gauge, k: &ConvexSet, x: &[f64], phi: &[f64], probes: &[Vec<f64>]) -> Result<bool, String> {
    let accepted = k.dist_subdifferential_contains(g, x, phi, 1e-9).map_err(|e| e.to_string())?;
    if !accepted {
        return Ok(false);
    }
    let h = k.support(phi).finite().ok_or("accepted φ has infinite support")?;
    let lhs = dot(phi, x) - k.distance(g, x).value;
    ensure((lhs - h).abs() <= 1e-7 * (1.0 + h.abs()), || format!("⟨φ,x⟩ − dist = {lhs} vs h = {h}"))?;
    let dx = k.distance(g, x).value;
    for y in probes {
        let dy = k.distance(g, y).value;
        let lin = dx + dot(phi, &sub(y, x));
        ensure(dy >= lin - 1e-7 * (1.0 + dy.abs()), || format!("dist({y:?}) = {dy} below {lin}"))?;
    }
    Ok(true)
}

// ---- Euclidean ----

/// Directional derivative against a one-sided finite difference.
pub fn check_directional_derivative(k: &ConvexSet, x: &[f64], y: &[f64]) -> Result<(), String> {
    let h = 1e-6;
    let dd = euclid::directional_derivative(k, x, y).map_err(|e| e.to_string())?;
    let fd = (k.euclidean_distance(&axpy(x, h, y)) - k.euclidean_distance(x)) / h;
    ensure((dd - fd).abs() <= 10.0 * h, || format!("derivative {dd} vs difference {fd}"))
}

// ---- solution-set properties ----

fn stays_optimal(inst: &Instance, p0: &[f64]) -> Result<(), String> {
    let out = oracle(inst, 5e-3);
    let f0 = inst.objective(p0);
    let slack = out.cell_size * weighted_lipschitz(inst);
    ensure(out.value >= f0 - slack - 1e-9, || format!("oracle {} below f(p0) = {f0}", out.value))?;
    find_certificate(inst, p0, 1e-6)
        .map(|_| ())
        .map_err(|e| format!("no certificate at p0: {e}"))
}

fn solve_points(g: &Gauge, pts: &[Vec<f64>]) -> Result<(Instance, Vec<f64>), String> {
    let inst = Instance::points(g, pts).unwrap();
    let sol = solve(&inst).map_err(|e| e.to_string())?;
    Ok((inst, sol.point))
}

/// Adding an optimal point as a site keeps it optimal.
pub fn check_absorption(g: &Gauge, pts: &[Vec<f64>]) -> Result<(), String> {
    let (_, p0) = solve_points(g, pts)?;
    let mut more = pts.to_vec();
    more.push(p0.clone());
    stays_optimal(&Instance::points(g, &more).unwrap(), &p0)
}

/// Pulling sites toward an optimal point keeps it optimal.
pub fn check_scaling(g: &Gauge, pts: &[Vec<f64>], lambdas: &[f64]) -> Result<(), String> {
    let (_, p0) = solve_points(g, pts)?;
    let moved: Vec<Vec<f64>> = pts
        .iter()
        .zip(lambdas)
        .map(|(p, &l)| axpy(&p0, l, &sub(p, &p0)))
        .collect();
    stays_optimal(&Instance::points(g, &moved).unwrap(), &p0)
}

/// Replacing the last site by an optimal non-site point keeps it optimal.
pub fn check_removal(g: &Gauge, pts: &[Vec<f64>]) -> Result<Option<()>, String> {
    let (_, p0) = solve_points(g, pts)?;
    if pts.iter().any(|p| dist(p, &p0) < 1e-3) {
        return Ok(None);
    }
    let mut swapped = pts[..pts.len() - 1].to_vec();
    swapped.insert(0, p0.clone());
    stays_optimal(&Instance::points(g, &swapped).unwrap(), &p0).map(Some)
}

/// Parts `{c ± v_j}` under a symmetric gauge share the minimizer `c`; the
/// union's minimizers are exactly the common minimizers of the parts.
pub fn check_splitting(rng: &mut R, g: &Gauge, c: &[f64], dirs: &[Vec<f64>]) -> Result<(), String> {
    let parts: Vec<Instance> = dirs
        .iter()
        .map(|v| Instance::points(g, &[add(c, v), sub(c, v)]).unwrap())
        .collect();
    let all: Vec<Vec<f64>> = dirs.iter().flat_map(|v| [add(c, v), sub(c, v)]).collect();
    let full = Instance::points(g, &all).unwrap();
    let mins: Vec<f64> = parts.iter().map(|p| p.objective(c)).collect();
    let fmin = full.objective(c);
    ensure((fmin - mins.iter().sum::<f64>()).abs() <= 1e-9 * (1.0 + fmin), || "c is not common".into())?;
    let out = oracle(&full, 5e-3);
    ensure(out.value >= fmin - out.cell_size * weighted_lipschitz(&full) - 1e-9, || {
        format!("oracle {} below f(c) = {fmin}", out.value)
    })?;
    let mut probes: Vec<Vec<f64>> = out.cells.clone();
    probes.extend((0..100).map(|_| axpy(c, rng.gen_range(0.0..1.0), &vec_in(rng, c.len(), 1.0))));
    for x in probes {
        let full_opt = full.objective(&x) <= fmin + 1e-9 * (1.0 + fmin);
        let parts_opt = parts
            .iter()
            .zip(&mins)
            .all(|(p, m)| p.objective(&x) <= m + 1e-9 * (1.0 + m));
        ensure(full_opt == parts_opt, || format!("at {x:?}: full {full_opt}, parts {parts_opt}"))?;
    }
    Ok(())
}

/// `euclid_optimal` accepts the solver's point and rejects a 1e−2 shift,
/// unless the shifted point is itself optimal.
pub fn check_euclid_vs_solver(rng: &mut R, inst: &Instance) -> Result<(), String> {
    let e = EuclidInstance::from_instance(inst).map_err(|e| e.to_string())?;
    let sol = solve(inst).map_err(|e| e.to_string())?;
    let report = euclid::euclid_optimal_report(&e, &sol.point, 1e-6).map_err(|e| e.to_string())?;
    ensure(report.optimal, || format!("solver point rejected, residual {}", report.residual))?;
    for (i, (k, w)) in e.sites().iter().enumerate() {
        if report.containing.contains(&i) {
            let z = &report.z[i];
            ensure(norm(z) <= w + 1e-6, || format!("cap component {i} too long"))?;
        } else {
            let p = k.euclidean_projection(&sol.point);
            let d = sub(&p, &sol.point);
            let expect = scale(&d, w / norm(&d));
            ensure(dist(&expect, &report.z[i]) <= 1e-9, || format!("z_{i} is not the projection direction"))?;
        }
    }
    let mut balance = vec![0.0; inst.dim()];
    for (i, z) in report.z.iter().enumerate() {
        let sign = if report.containing.contains(&i) { -1.0 } else { 1.0 };
        balance = axpy(&balance, sign, z);
    }
    ensure(norm(&balance) <= 1e-5, || format!("components do not balance: {balance:?}"))?;

    let shifted = axpy(&sol.point, 1e-2, &unit_vec(rng, inst.dim()));
    if inst.objective(&shifted) <= sol.value + 1e-9 {
        return Ok(());
    }
    let ok = euclid::euclid_optimal(&e, &shifted, 1e-6).map_err(|e| e.to_string())?;
    ensure(!ok, || "shifted point accepted".into())
}

/// A random flat-point absorbed configuration: `k` far points, `{0}`, and a
/// flat through the origin of dimension in `1..d−1`.
pub fn flat_point_config(rng: &mut R, d: usize, k: usize) -> EuclidInstance {
    let q = {
        let mut q: Vec<Vec<f64>> = Vec::new();
        while q.len() < d {
            let mut v = unit_vec(rng, d);
            for b in &q {
                v = axpy(&v, -dot(&v, b), b);
            }
            if norm(&v) > 0.2 {
                q.push(scale(&v, 1.0 / norm(&v)));
            }
        }
        q
    };
    let fdim = rng.gen_range(1..d);
    let mut sets: Vec<ConvexSet> = (0..k)
        .map(|_| ConvexSet::point(scale(&unit_vec(rng, d), rng.gen_range(1.0..5.0))).unwrap())
        .collect();
    sets.push(ConvexSet::point(vec![0.0; d]).unwrap());
    sets.push(ConvexSet::flat(vec![0.0; d], q[..fdim].to_vec()).unwrap());
    EuclidInstance::unit(d, sets).unwrap()
}
