//! Euclidean specializations: the projection-form optimality criterion,
//! directional derivatives of distance functions, the floating and absorbed
//! case tests, the flat-point absorbed criterion, and multiplicity of
//! minimizers for one affine flat plus points.

use serde::Serialize;
use thiserror::Error;

use crate::ftcore::{Instance, InstanceError, Site};
use crate::gauge::{enumerate_vertices, Gauge};
use crate::linalg::{self, dot, norm, scale, sub};
use crate::proj;
use crate::sets::{AffineFlat, ConvexSet};

/// Sweeps of the product-space alternating projection.
pub const DYKSTRA_SWEEPS: usize = 10_000;
/// Residual below which the Minkowski-sum membership is accepted.
pub const DYKSTRA_TOL: f64 = 1e-7;
/// Tolerance on norms and orthogonality residuals in the case tests.
pub const CASE_TOL: f64 = 1e-9;
/// Configurations this close to the flat-point bound skip the cross-check.
pub const BOUNDARY_BAND: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EuclidError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("case precondition violated: {0}")]
    Structure(String),
    #[error("points {0} and {1} coincide")]
    DuplicatePoints(usize, usize),
    #[error("bound verdict {bound} disagrees with membership verdict {membership} (residual {residual})")]
    CriterionDisagreement {
        bound: bool,
        membership: bool,
        residual: f64,
    },
}

/// Sites with weights under the common Euclidean norm.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclidInstance {
    dim: usize,
    sites: Vec<(ConvexSet, f64)>,
}

impl EuclidInstance {
    pub fn new(dim: usize, sites: Vec<(ConvexSet, f64)>) -> Result<Self, EuclidError> {
        let inst = Self { dim, sites };
        inst.to_instance()?;
        Ok(inst)
    }

    /// Unit-weight sites.
    pub fn unit(dim: usize, sets: Vec<ConvexSet>) -> Result<Self, EuclidError> {
        Self::new(dim, sets.into_iter().map(|k| (k, 1.0)).collect())
    }

    /// Accepts a general instance whose gauges are all Euclidean and which has no constraint.
    pub fn from_instance(inst: &Instance) -> Result<Self, EuclidError> {
        if inst.constraint().is_some() {
            return Err(EuclidError::Structure("constrained instances are not covered".into()));
        }
        if !inst.sites().iter().all(|s| s.gauge.is_euclidean()) {
            return Err(EuclidError::Structure("all gauges must be Euclidean".into()));
        }
        Ok(Self {
            dim: inst.dim(),
            sites: inst.sites().iter().map(|s| (s.set.clone(), s.weight)).collect(),
        })
    }

    pub fn to_instance(&self) -> Result<Instance, EuclidError> {
        let g = Gauge::euclidean(self.dim).map_err(|_| InstanceError::ZeroDimension)?;
        Ok(Instance::new(
            self.dim,
            self.sites
                .iter()
                .map(|(k, w)| Site::new(k.clone(), g.clone(), *w))
                .collect(),
            None,
        )?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sites(&self) -> &[(ConvexSet, f64)] {
        &self.sites
    }

    pub fn with_site(&self, set: ConvexSet, weight: f64) -> Result<Self, EuclidError> {
        let mut sites = self.sites.clone();
        sites.push((set, weight));
        Self::new(self.dim, sites)
    }

    fn check(&self, x: &[f64]) -> Result<(), EuclidError> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(EuclidError::Dimension {
                expected: self.dim,
                got: x.len(),
            })
        }
    }
}

/// `(Proj(x, K) − x) / ‖Proj(x, K) − x‖`, or `None` when `x ∈ K` within `tol`.
pub fn unit_toward(k: &ConvexSet, x: &[f64], tol: f64) -> Option<Vec<f64>> {
    let d = sub(&k.euclidean_projection(x), x);
    let n = norm(&d);
    (n > tol).then(|| scale(&d, 1.0 / n))
}

/// `nor(x, K)` with faces within `tol` of `x` counted as active: balls are
/// snapped radially onto their sphere, polytopes use the cone generated by
/// their tol-active facet normals and the orthogonal complement of their
/// affine hull.
enum NormalCone<'a> {
    At(&'a ConvexSet, Vec<f64>),
    Generated(Vec<Vec<f64>>),
}

impl<'a> NormalCone<'a> {
    fn new(k: &'a ConvexSet, x: &[f64], tol: f64) -> Self {
        match k {
            ConvexSet::Ball { center, radius } => {
                let r = sub(x, center);
                let n = norm(&r);
                let b = if n >= radius - tol && n > 0.0 {
                    linalg::axpy(center, radius / n, &r)
                } else {
                    x.to_vec()
                };
                NormalCone::At(k, b)
            }
            ConvexSet::VPolytope(vs) => NormalCone::Generated(polytope_normal_generators(vs, x, tol)),
            _ => NormalCone::At(k, x.to_vec()),
        }
    }

    fn project(&self, z: &[f64]) -> Vec<f64> {
        match self {
            NormalCone::At(k, b) => k.project_onto_normal_cone(b, z, 1e-12),
            NormalCone::Generated(gens) => proj::project_onto_cone(gens, z),
        }
    }
}

fn polytope_normal_generators(vs: &[Vec<f64>], x: &[f64], tol: f64) -> Vec<Vec<f64>> {
    let d = x.len();
    let c = linalg::centroid(vs);
    let dirs: Vec<Vec<f64>> = vs.iter().map(|v| sub(v, &c)).collect();
    let scale_k = dirs.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut complement: Vec<Vec<f64>> = Vec::new();
    for v in &dirs {
        if let Some(b) = linalg::orthonormalize(&[basis.clone(), vec![v.clone()]].concat(), 1e-9) {
            if norm(v) > 1e-9 * scale_k {
                basis = b;
            }
        }
    }
    for i in 0..d {
        let e = linalg::unit(d, i);
        if let Some(b) = linalg::orthonormalize(&[basis.clone(), complement.clone(), vec![e]].concat(), 1e-6) {
            complement = b[basis.len()..].to_vec();
        }
    }
    let mut gens: Vec<Vec<f64>> = complement.iter().flat_map(|u| [u.clone(), linalg::neg(u)]).collect();
    if basis.is_empty() {
        return gens;
    }
    let local = |v: &[f64]| -> Vec<f64> { basis.iter().map(|b| dot(v, b)).collect() };
    let rows: Vec<Vec<f64>> = dirs.iter().map(|v| local(v)).filter(|r| norm(r) > 1e-12 * scale_k).collect();
    let xl = local(&sub(x, &c));
    for f in enumerate_vertices(&rows, basis.len()) {
        if dot(&f, &xl) >= 1.0 - tol * norm(&f) {
            let g = basis.iter().zip(&f).fold(vec![0.0; d], |acc, (b, fi)| linalg::axpy(&acc, *fi, b));
            gens.push(g);
        }
    }
    gens
}

/// Projection onto `nor(x, K) ∩ C(0, w)`: the cone projection shrunk into the ball.
fn cap_projection(cone: &NormalCone, w: f64, z: &[f64]) -> Vec<f64> {
    let p = cone.project(z);
    let n = norm(&p);
    if n > w {
        scale(&p, w / n)
    } else {
        p
    }
}

/// Decides `u ∈ Σ_j S_j` for convex sets given by their projections, by
/// alternating projections between `{(z_j) : Σ z_j = u}` and `Π S_j`.
/// Returns the final residual `‖Σ z_j − u‖` and the components.
pub fn minkowski_membership(
    u: &[f64],
    projectors: &[&dyn Fn(&[f64]) -> Vec<f64>],
    tol: f64,
) -> (f64, Vec<Vec<f64>>) {
    let d = u.len();
    let m = projectors.len();
    if m == 0 {
        return (norm(u), Vec::new());
    }
    if m == 1 {
        let z = projectors[0](u);
        return (linalg::dist(&z, u), vec![z]);
    }
    let mut x: Vec<Vec<f64>> = vec![scale(u, 1.0 / m as f64); m];
    let mut q: Vec<Vec<f64>> = vec![vec![0.0; d]; m];
    let mut best = (f64::INFINITY, x.clone());
    for _ in 0..DYKSTRA_SWEEPS {
        let excess = scale(&sub(&linalg::sum_vectors(&x, d), u), 1.0 / m as f64);
        for j in 0..m {
            let y = sub(&x[j], &excess);
            let shifted = linalg::add(&y, &q[j]);
            let z = projectors[j](&shifted);
            q[j] = sub(&shifted, &z);
            x[j] = z;
        }
        let r = linalg::dist(&linalg::sum_vectors(&x, d), u);
        if r < best.0 {
            best = (r, x.clone());
        }
        if r <= tol {
            break;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EuclidReport {
    pub optimal: bool,
    /// `Σ w_i (Proj(x̄, K_i) − x̄)/‖·‖` over sites not containing `x̄`.
    pub u: Vec<f64>,
    /// Sites containing `x̄`.
    pub containing: Vec<usize>,
    /// Per site: the weighted unit vector, or the cap component found for containing sites.
    pub z: Vec<Vec<f64>>,
    pub residual: f64,
}

/// The projection-form criterion: `u` lies in the Minkowski sum of the caps
/// `nor(x̄, K_i) ∩ C(0, w_i)` over the sites containing `x̄`.
pub fn euclid_optimal_report(inst: &EuclidInstance, xbar: &[f64], tol: f64) -> Result<EuclidReport, EuclidError> {
    inst.check(xbar)?;
    let d = inst.dim;
    let mut u = vec![0.0; d];
    let mut z = vec![Vec::new(); inst.sites.len()];
    let mut containing = Vec::new();
    for (i, (k, w)) in inst.sites.iter().enumerate() {
        match unit_toward(k, xbar, tol) {
            Some(e) => {
                z[i] = scale(&e, *w);
                u = linalg::axpy(&u, *w, &e);
            }
            None => containing.push(i),
        }
    }
    let caps: Vec<Box<dyn Fn(&[f64]) -> Vec<f64>>> = containing
        .iter()
        .map(|&i| {
            let (k, w) = &inst.sites[i];
            let cone = NormalCone::new(k, xbar, tol);
            Box::new(move |v: &[f64]| cap_projection(&cone, *w, v)) as Box<dyn Fn(&[f64]) -> Vec<f64>>
        })
        .collect();
    let refs: Vec<&dyn Fn(&[f64]) -> Vec<f64>> = caps.iter().map(|b| b.as_ref()).collect();
    let (residual, parts) = minkowski_membership(&u, &refs, tol);
    for (&i, p) in containing.iter().zip(parts) {
        z[i] = p;
    }
    Ok(EuclidReport {
        optimal: residual <= tol,
        u,
        containing,
        z,
        residual,
    })
}

pub fn euclid_optimal(inst: &EuclidInstance, xbar: &[f64], tol: f64) -> Result<bool, EuclidError> {
    Ok(euclid_optimal_report(inst, xbar, tol)?.optimal)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlatCase {
    Floating,
    PointAbsorbed,
    FlatAbsorbed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseReport {
    pub optimal: bool,
    /// Weighted sum of unit vectors toward the sites that do not contain `x̄`.
    pub v: Vec<f64>,
    pub norm: f64,
    /// Largest `|⟨v, u⟩|` over an orthonormal basis `u` of the flat (flat-absorbed case).
    pub orthogonality: f64,
}

fn weighted_pull(sites: &[(ConvexSet, f64)], xbar: &[f64]) -> Result<Vec<f64>, EuclidError> {
    let mut v = vec![0.0; xbar.len()];
    for (i, (k, w)) in sites.iter().enumerate() {
        let e = unit_toward(k, xbar, CASE_TOL * (1.0 + norm(xbar)))
            .ok_or_else(|| EuclidError::Structure(format!("site {i} contains the point")))?;
        v = linalg::axpy(&v, *w, &e);
    }
    Ok(v)
}

/// Evaluates the displayed criterion of the chosen case after checking its
/// structural preconditions; the distinguished site is the last one.
pub fn flat_case_test(inst: &EuclidInstance, xbar: &[f64], case: FlatCase) -> Result<CaseReport, EuclidError> {
    inst.check(xbar)?;
    let n = inst.sites.len();
    let tol = CASE_TOL * (1.0 + norm(xbar));
    let (others, last) = match case {
        FlatCase::Floating => (&inst.sites[..], None),
        _ => (&inst.sites[..n - 1], Some(&inst.sites[n - 1])),
    };
    let v = weighted_pull(others, xbar)?;
    let vn = norm(&v);
    let (optimal, orthogonality) = match (case, last) {
        (FlatCase::Floating, _) => (vn <= CASE_TOL, 0.0),
        (FlatCase::PointAbsorbed, Some((k, w))) => {
            match k {
                ConvexSet::Singleton(p) if linalg::dist(p, xbar) <= tol => {}
                _ => return Err(EuclidError::Structure("last site must be the singleton {x̄}".into())),
            }
            (vn <= w + CASE_TOL, 0.0)
        }
        (FlatCase::FlatAbsorbed, Some((k, w))) => {
            let f = match k {
                ConvexSet::Flat(f) if k.euclidean_distance(xbar) <= tol => f,
                _ => return Err(EuclidError::Structure("last site must be an affine flat containing x̄".into())),
            };
            let orth = f.basis().iter().map(|b| dot(b, &v).abs()).fold(0.0, f64::max);
            (orth <= CASE_TOL && vn <= w + CASE_TOL, orth)
        }
        _ => unreachable!(),
    };
    Ok(CaseReport {
        optimal,
        v,
        norm: vn,
        orthogonality,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatPointReport {
    pub optimal: bool,
    pub v: Vec<f64>,
    pub alpha: f64,
    pub bound: f64,
    /// Residual of the cap-sum membership test.
    pub residual: f64,
    /// Membership verdict, absent when `‖v‖` is within the boundary band of the bound.
    pub membership: Option<bool>,
}

/// `1/cos α` for `α ≤ π/4`, else `2 sin α`.
pub fn flat_point_bound(alpha: f64) -> f64 {
    if alpha <= std::f64::consts::FRAC_PI_4 {
        1.0 / alpha.cos()
    } else {
        2.0 * alpha.sin()
    }
}

/// Angle between `v` and the direction space of `f`, zero for `v = 0`.
pub fn angle_to_flat(v: &[f64], f: &AffineFlat) -> f64 {
    if norm(v) == 0.0 {
        return 0.0;
    }
    let along = linalg::project_onto_span(v, f.basis());
    norm(&sub(v, &along)).atan2(norm(&along))
}

/// The flat-point absorbed criterion: sites `n−1` and `n` are `{x̄}` and an
/// affine flat through `x̄`, both with unit weight. The piecewise bound is
/// cross-checked against membership of `v` in `C(0,1) + (V⊥ ∩ C(0,1))`.
pub fn flat_point_absorbed_test(inst: &EuclidInstance, xbar: &[f64]) -> Result<FlatPointReport, EuclidError> {
    inst.check(xbar)?;
    let n = inst.sites.len();
    let tol = CASE_TOL * (1.0 + norm(xbar));
    if n < 2 {
        return Err(EuclidError::Structure("needs the point site and the flat site".into()));
    }
    let (point, wp) = &inst.sites[n - 2];
    let (flat, wf) = &inst.sites[n - 1];
    match point {
        ConvexSet::Singleton(p) if linalg::dist(p, xbar) <= tol => {}
        _ => return Err(EuclidError::Structure("site n−1 must be the singleton {x̄}".into())),
    }
    let f = match flat {
        ConvexSet::Flat(f) if flat.euclidean_distance(xbar) <= tol => f,
        _ => return Err(EuclidError::Structure("site n must be an affine flat containing x̄".into())),
    };
    if f.flat_dim() == 0 || f.flat_dim() >= inst.dim {
        return Err(EuclidError::Structure("flat dimension must lie in 1..d−1".into()));
    }
    if *wp != 1.0 || *wf != 1.0 {
        return Err(EuclidError::Structure("the absorbing sites must have unit weight".into()));
    }
    let v = weighted_pull(&inst.sites[..n - 2], xbar)?;
    let alpha = angle_to_flat(&v, f);
    let bound = flat_point_bound(alpha);
    let vn = norm(&v);
    let optimal = vn <= bound + CASE_TOL;

    let ball = |z: &[f64]| {
        let n = norm(z);
        if n > 1.0 {
            scale(z, 1.0 / n)
        } else {
            z.to_vec()
        }
    };
    let flat_cone = NormalCone::new(flat, xbar, tol);
    let flat_cap = |z: &[f64]| cap_projection(&flat_cone, 1.0, z);
    let (residual, _) = minkowski_membership(&v, &[&ball, &flat_cap], DYKSTRA_TOL);
    let membership = ((vn - bound).abs() > BOUNDARY_BAND).then_some(residual <= DYKSTRA_TOL);
    if let Some(m) = membership {
        if m != optimal {
            return Err(EuclidError::CriterionDisagreement {
                bound: optimal,
                membership: m,
                residual,
            });
        }
    }
    Ok(FlatPointReport {
        optimal,
        v,
        alpha,
        bound,
        residual,
        membership,
    })
}

/// One-sided directional derivative of `dist(·, K)` at `x` along `y`.
pub fn directional_derivative(k: &ConvexSet, x: &[f64], y: &[f64]) -> Result<f64, EuclidError> {
    let d = k.dim();
    for v in [x, y] {
        if v.len() != d {
            return Err(EuclidError::Dimension { expected: d, got: v.len() });
        }
    }
    let p = k.euclidean_projection(x);
    let r = sub(x, &p);
    let n = norm(&r);
    if n > 1e-12 * (1.0 + norm(x)) {
        Ok(dot(&r, y) / n)
    } else {
        Ok(norm(&k.project_onto_normal_cone(&p, y, 1e-12)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiplicityCase {
    /// One point off the flat.
    I,
    /// An even number of points on a line inside the flat.
    II,
    /// An odd number of points ortho-collinear to the flat, median off the flat.
    III,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Multiplicity {
    Unique,
    Multiple {
        case: MultiplicityCase,
        /// Endpoints of the segment of minimizers.
        locus: [Vec<f64>; 2],
        /// The foot point on the flat coincides with one of the points and is counted twice.
        doubled_foot: bool,
    },
}

/// Whether `dist(·, F) + Σ ‖p_i − ·‖` has more than one minimizer, with the
/// minimizing segment when it does.
pub fn multiplicity_classify(f: &AffineFlat, points: &[Vec<f64>], tol: f64) -> Result<Multiplicity, EuclidError> {
    let d = f.base().len();
    for p in points {
        if p.len() != d {
            return Err(EuclidError::Dimension { expected: d, got: p.len() });
        }
    }
    if points.is_empty() {
        return Err(EuclidError::Structure("at least one point is required".into()));
    }
    let scale_len = 1.0
        + points
            .iter()
            .map(|p| linalg::max_abs(&sub(p, f.base())))
            .fold(0.0, f64::max);
    let tol = tol * scale_len;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if linalg::dist(&points[i], &points[j]) <= tol {
                return Err(EuclidError::DuplicatePoints(i, j));
            }
        }
    }
    let in_flat = |p: &[f64]| norm(&f.orthogonal_part(&sub(p, f.base()))) <= tol;
    let n = points.len();
    let p1 = &points[0];
    if n == 1 {
        return Ok(if in_flat(p1) {
            Multiplicity::Unique
        } else {
            Multiplicity::Multiple {
                case: MultiplicityCase::I,
                locus: [p1.clone(), f.project(p1)],
                doubled_foot: false,
            }
        });
    }
    let far = points
        .iter()
        .max_by(|a, b| linalg::dist(a, p1).total_cmp(&linalg::dist(b, p1)))
        .expect("nonempty");
    let e = scale(&sub(far, p1), 1.0 / linalg::dist(far, p1));
    let collinear = points.iter().all(|p| {
        let r = sub(p, p1);
        norm(&linalg::axpy(&r, -dot(&r, &e), &e)) <= tol
    });
    if !collinear {
        return Ok(Multiplicity::Unique);
    }
    let at = |t: f64| linalg::axpy(p1, t, &e);
    let mut ts: Vec<f64> = points.iter().map(|p| dot(&sub(p, p1), &e)).collect();
    ts.sort_by(f64::total_cmp);

    let line_in_flat = in_flat(p1) && norm(&f.orthogonal_part(&e)) <= tol / scale_len;
    if line_in_flat {
        return Ok(if n % 2 == 0 {
            Multiplicity::Multiple {
                case: MultiplicityCase::II,
                locus: [at(ts[n / 2 - 1]), at(ts[n / 2])],
                doubled_foot: false,
            }
        } else {
            Multiplicity::Unique
        });
    }
    if n % 2 == 0 {
        return Ok(Multiplicity::Unique);
    }
    let ortho = f.basis().iter().all(|b| dot(b, &e).abs() <= tol / scale_len);
    let r = f.orthogonal_part(&sub(p1, f.base()));
    let meets = norm(&linalg::axpy(&r, -dot(&r, &e), &e)) <= tol;
    if !(ortho && meets) {
        return Ok(Multiplicity::Unique);
    }
    let median = at(ts[n / 2]);
    if in_flat(&median) {
        return Ok(Multiplicity::Unique);
    }
    let t0 = -dot(&r, &e);
    let doubled_foot = ts.iter().any(|&t| (t - t0).abs() <= tol);
    let mut all = ts.clone();
    all.push(t0);
    all.sort_by(f64::total_cmp);
    Ok(Multiplicity::Multiple {
        case: MultiplicityCase::III,
        locus: [at(all[(n - 1) / 2]), at(all[(n + 1) / 2])],
        doubled_foot,
    })
}
