//! Convex sites: support values, membership, gauge distance with a nearest
//! point, Euclidean projection, and normal cones.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::gauge::Gauge;
use crate::linalg::{self, add, axpy, dot, norm, scale, sub};
use crate::lp::{Cmp, Lp};
use crate::proj::{self, EllipsoidProjector};

/// Orthogonality tolerance for support values of flats.
pub const FLAT_ORTHO_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("set needs at least one generator")]
    Empty,
    #[error("flat directions are linearly dependent")]
    DependentDirections,
    #[error("ball radius must be positive")]
    NonPositiveRadius,
    #[error("non-finite coordinate in set data")]
    NonFinite,
    #[error("point is not in the set")]
    NotInSet,
}

/// `r + span(directions)`, with a cached orthonormal basis of the span.
#[derive(Clone, Debug)]
pub struct AffineFlat {
    base: Vec<f64>,
    directions: Vec<Vec<f64>>,
    basis: Vec<Vec<f64>>,
}

impl PartialEq for AffineFlat {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.directions == other.directions
    }
}

impl AffineFlat {
    pub fn new(base: Vec<f64>, directions: Vec<Vec<f64>>) -> Result<Self, SetError> {
        let d = base.len();
        if d == 0 {
            return Err(SetError::Empty);
        }
        for u in &directions {
            if u.len() != d {
                return Err(SetError::DimensionMismatch {
                    expected: d,
                    got: u.len(),
                });
            }
        }
        if !base.iter().chain(directions.iter().flatten()).all(|v| v.is_finite()) {
            return Err(SetError::NonFinite);
        }
        let basis =
            linalg::orthonormalize(&directions, 1e-10).ok_or(SetError::DependentDirections)?;
        Ok(AffineFlat {
            base,
            directions,
            basis,
        })
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    /// Orthonormal basis of the direction space `U`.
    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn flat_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let rel = sub(x, &self.base);
        add(&self.base, &linalg::project_onto_span(&rel, &self.basis))
    }

    /// Component of `v` orthogonal to `U`.
    pub fn orthogonal_part(&self, v: &[f64]) -> Vec<f64> {
        sub(v, &linalg::project_onto_span(v, &self.basis))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConvexSet {
    Singleton(Vec<f64>),
    /// Convex hull of the listed points (segments and polygons included).
    VPolytope(Vec<Vec<f64>>),
    Flat(AffineFlat),
    Ball { center: Vec<f64>, radius: f64 },
}

/// Extended-real support value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Support {
    Finite(f64),
    Infinite,
}

impl Support {
    pub fn finite(self) -> Option<f64> {
        match self {
            Support::Finite(v) => Some(v),
            Support::Infinite => None,
        }
    }
}

/// Value of `dist_γ(x, K)` together with a nearest point `y ∈ K`.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub value: f64,
    pub witness: Vec<f64>,
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl ConvexSet {
    pub fn point(p: Vec<f64>) -> Result<Self, SetError> {
        if p.is_empty() {
            return Err(SetError::Empty);
        }
        if !finite(&p) {
            return Err(SetError::NonFinite);
        }
        Ok(ConvexSet::Singleton(p))
    }

    pub fn polytope(vertices: Vec<Vec<f64>>) -> Result<Self, SetError> {
        let d = vertices.first().ok_or(SetError::Empty)?.len();
        if d == 0 {
            return Err(SetError::Empty);
        }
        for v in &vertices {
            if v.len() != d {
                return Err(SetError::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
            if !finite(v) {
                return Err(SetError::NonFinite);
            }
        }
        Ok(ConvexSet::VPolytope(vertices))
    }

    pub fn segment(a: Vec<f64>, b: Vec<f64>) -> Result<Self, SetError> {
        Self::polytope(vec![a, b])
    }

    pub fn flat(base: Vec<f64>, directions: Vec<Vec<f64>>) -> Result<Self, SetError> {
        Ok(ConvexSet::Flat(AffineFlat::new(base, directions)?))
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self, SetError> {
        if center.is_empty() {
            return Err(SetError::Empty);
        }
        if !finite(&center) || !radius.is_finite() {
            return Err(SetError::NonFinite);
        }
        if radius <= 0.0 {
            return Err(SetError::NonPositiveRadius);
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Singleton(p) => p.len(),
            ConvexSet::VPolytope(v) => v[0].len(),
            ConvexSet::Flat(f) => f.base.len(),
            ConvexSet::Ball { center, .. } => center.len(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, ConvexSet::Flat(f) if f.flat_dim() > 0)
    }

    /// Polyhedral sets: everything but balls.
    pub fn is_polyhedral(&self) -> bool {
        !matches!(self, ConvexSet::Ball { .. })
    }

    /// Some point of the set.
    pub fn anchor(&self) -> Vec<f64> {
        match self {
            ConvexSet::Singleton(p) => p.clone(),
            ConvexSet::VPolytope(v) => linalg::centroid(v),
            ConvexSet::Flat(f) => f.base.clone(),
            ConvexSet::Ball { center, .. } => center.clone(),
        }
    }

    /// Points whose bounding box covers the set (flats contribute their base).
    pub fn reference_points(&self) -> Vec<Vec<f64>> {
        match self {
            ConvexSet::Singleton(p) => vec![p.clone()],
            ConvexSet::VPolytope(v) => v.clone(),
            ConvexSet::Flat(f) => vec![f.base.clone()],
            ConvexSet::Ball { center, radius } => (0..center.len())
                .flat_map(|i| {
                    let e = linalg::unit(center.len(), i);
                    [axpy(center, *radius, &e), axpy(center, -*radius, &e)]
                })
                .collect(),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), SetError> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(SetError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            })
        }
    }

    /// `h(φ, K) = sup { ⟨φ, y⟩ : y ∈ K }`.
    pub fn support(&self, phi: &[f64]) -> Support {
        match self {
            ConvexSet::Singleton(p) => Support::Finite(dot(phi, p)),
            ConvexSet::VPolytope(v) => Support::Finite(
                v.iter().map(|p| dot(phi, p)).fold(f64::NEG_INFINITY, f64::max),
            ),
            ConvexSet::Flat(f) => {
                let tol = FLAT_ORTHO_TOL * (1.0 + norm(phi));
                if f.basis.iter().all(|u| dot(phi, u).abs() <= tol) {
                    Support::Finite(dot(phi, &f.base))
                } else {
                    Support::Infinite
                }
            }
            ConvexSet::Ball { center, radius } => {
                Support::Finite(dot(phi, center) + radius * norm(phi))
            }
        }
    }

    pub fn support_value(&self, phi: &[f64]) -> Result<Support, SetError> {
        self.check_dim(phi)?;
        Ok(self.support(phi))
    }

    /// Euclidean nearest point of `K` to `x`.
    pub fn euclidean_projection(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConvexSet::Singleton(p) => p.clone(),
            ConvexSet::VPolytope(v) => proj::project_onto_hull(v, x).0,
            ConvexSet::Flat(f) => f.project(x),
            ConvexSet::Ball { center, radius } => {
                let r = sub(x, center);
                let n = norm(&r);
                if n <= *radius {
                    x.to_vec()
                } else {
                    axpy(center, radius / n, &r)
                }
            }
        }
    }

    pub fn euclidean_distance(&self, x: &[f64]) -> f64 {
        match self {
            ConvexSet::Ball { center, radius } => (linalg::dist(x, center) - radius).max(0.0),
            _ => linalg::dist(x, &self.euclidean_projection(x)),
        }
    }

    /// Membership within Euclidean distance `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool, SetError> {
        self.check_dim(x)?;
        Ok(self.euclidean_distance(x) <= tol)
    }

    /// `dist_γ(x, K) = inf { γ(y − x) : y ∈ K }` with a minimizing `y`.
    pub fn distance(&self, g: &Gauge, x: &[f64]) -> Projection {
        if let ConvexSet::Singleton(p) = self {
            return Projection {
                value: g.eval(&sub(p, x)),
                witness: p.clone(),
            };
        }
        if g.is_euclidean() {
            let y = self.euclidean_projection(x);
            let value = linalg::dist(&y, x);
            return if value == 0.0 {
                Projection {
                    value,
                    witness: x.to_vec(),
                }
            } else {
                Projection { value, witness: y }
            };
        }
        match (g.is_polytope(), self) {
            (true, ConvexSet::VPolytope(v)) => polytope_gauge_to_hull(g, x, v),
            (true, ConvexSet::Flat(f)) => polytope_gauge_to_flat(g, x, f),
            (true, ConvexSet::Ball { center, radius }) => polytope_gauge_to_ball(g, x, center, *radius),
            (false, ConvexSet::VPolytope(v)) => ellipsoid_gauge_to_hull(g, x, v),
            (false, ConvexSet::Flat(f)) => ellipsoid_gauge_to_flat(g, x, f),
            (false, ConvexSet::Ball { center, radius }) => ellipsoid_gauge_to_ball(g, x, center, *radius),
            (_, ConvexSet::Singleton(_)) => unreachable!(),
        }
    }

    pub fn set_distance(&self, g: &Gauge, x: &[f64]) -> Result<Projection, SetError> {
        self.check_dim(x)?;
        if g.dim() != self.dim() {
            return Err(SetError::DimensionMismatch {
                expected: self.dim(),
                got: g.dim(),
            });
        }
        Ok(self.distance(g, x))
    }

    /// `φ ∈ nor(x, K)`, i.e. `⟨φ, y − x⟩ ≤ tol·(1 + ‖φ‖)` for all `y ∈ K`.
    pub fn normal_cone_contains(&self, x: &[f64], phi: &[f64], tol: f64) -> Result<bool, SetError> {
        self.check_dim(x)?;
        self.check_dim(phi)?;
        let member_tol = tol.max(1e-9 * (1.0 + norm(x)));
        if !self.contains(x, member_tol)? {
            return Err(SetError::NotInSet);
        }
        Ok(match self.support(phi) {
            Support::Finite(h) => h - dot(phi, x) <= tol * (1.0 + norm(phi)),
            Support::Infinite => false,
        })
    }

    /// Membership of `φ` in `∂dist_γ(·, K)(x)`.
    pub fn dist_subdifferential_contains(
        &self,
        g: &Gauge,
        x: &[f64],
        phi: &[f64],
        tol: f64,
    ) -> Result<bool, SetError> {
        self.check_dim(x)?;
        self.check_dim(phi)?;
        if g.polar(&linalg::neg(phi)) > 1.0 + tol {
            return Ok(false);
        }
        let Support::Finite(h) = self.support(phi) else {
            return Ok(false);
        };
        let dist = self.distance(g, x).value;
        let px = dot(phi, x);
        Ok((h + dist - px).abs() <= tol * (1.0 + px.abs()))
    }

    /// Euclidean projection of `z` onto the normal cone `nor(x, K)`; `x` must lie in `K`.
    pub fn project_onto_normal_cone(&self, x: &[f64], z: &[f64], tol: f64) -> Vec<f64> {
        match self {
            ConvexSet::Singleton(_) => z.to_vec(),
            ConvexSet::Flat(f) => f.orthogonal_part(z),
            ConvexSet::Ball { center, radius } => {
                let r = sub(x, center);
                let n = norm(&r);
                if n < radius - tol {
                    vec![0.0; z.len()]
                } else {
                    let u = scale(&r, 1.0 / n);
                    scale(&u, dot(z, &u).max(0.0))
                }
            }
            ConvexSet::VPolytope(v) => {
                // nor(x, K) is the polar of cone{v_k − x}; Moreau splits z across the pair.
                let gens: Vec<Vec<f64>> = v.iter().map(|p| sub(p, x)).collect();
                sub(z, &proj::project_onto_cone(&gens, z))
            }
        }
    }
}

fn hull_lp(g: &Gauge, x: &[f64], vertices: &[Vec<f64>]) -> Projection {
    // min t  s.t.  ⟨a_j, Σλ_k v_k − x⟩ ≤ t,  Σλ_k = 1,  λ ≥ 0.
    let mut lp = Lp::new();
    let lam = lp.add_vars(vertices.len(), false);
    let t = lp.add_var(false);
    lp.set_cost(t, 1.0);
    lp.add_row(lam.iter().map(|&j| (j, 1.0)).collect(), Cmp::Eq, 1.0);
    for a in g.facets() {
        let mut row: Vec<(usize, f64)> = lam
            .iter()
            .zip(vertices)
            .map(|(&j, v)| (j, dot(a, v)))
            .collect();
        row.push((t, -1.0));
        lp.add_row(row, Cmp::Le, dot(a, x));
    }
    let sol = lp.solve().optimal().expect("hull distance LP is feasible and bounded");
    let mut y = vec![0.0; x.len()];
    for (&j, v) in lam.iter().zip(vertices) {
        y = axpy(&y, sol.x[j].max(0.0), v);
    }
    finish(g, x, y)
}

fn finish(g: &Gauge, x: &[f64], y: Vec<f64>) -> Projection {
    let value = g.eval(&sub(&y, x));
    if value <= 1e-14 * (1.0 + norm(x)) {
        Projection {
            value: 0.0,
            witness: x.to_vec(),
        }
    } else {
        Projection { value, witness: y }
    }
}

fn polytope_gauge_to_hull(g: &Gauge, x: &[f64], vertices: &[Vec<f64>]) -> Projection {
    if vertices.len() == 1 {
        return finish(g, x, vertices[0].clone());
    }
    hull_lp(g, x, vertices)
}

fn polytope_gauge_to_flat(g: &Gauge, x: &[f64], f: &AffineFlat) -> Projection {
    // min t  s.t.  ⟨a_j, r + Σμ_l u_l − x⟩ ≤ t,  μ free.
    let mut lp = Lp::new();
    let mu = lp.add_vars(f.basis.len(), true);
    let t = lp.add_var(false);
    lp.set_cost(t, 1.0);
    let rel = sub(&f.base, x);
    for a in g.facets() {
        let mut row: Vec<(usize, f64)> = mu
            .iter()
            .zip(&f.basis)
            .map(|(&j, u)| (j, dot(a, u)))
            .collect();
        row.push((t, -1.0));
        lp.add_row(row, Cmp::Le, -dot(a, &rel));
    }
    let sol = lp.solve().optimal().expect("flat distance LP is feasible and bounded");
    let mut y = f.base.clone();
    for (&j, u) in mu.iter().zip(&f.basis) {
        y = axpy(&y, sol.x[j], u);
    }
    finish(g, x, y)
}

const ROOT_TOL: f64 = 1e-15;

fn polytope_gauge_to_ball(g: &Gauge, x: &[f64], center: &[f64], radius: f64) -> Projection {
    // Smallest t with dist₂(c, x + tB) ≤ r; x + tB = conv(x + t·b_k).
    let verts = g.vertices();
    let near = |t: f64| -> (f64, Vec<f64>) {
        let pts: Vec<Vec<f64>> = verts.iter().map(|b| axpy(x, t, b)).collect();
        let (p, _) = proj::project_onto_hull(&pts, center);
        (linalg::dist(&p, center) - radius, p)
    };
    let (f0, _) = near(0.0);
    if f0 <= 0.0 {
        return Projection {
            value: 0.0,
            witness: x.to_vec(),
        };
    }
    let hi = g.eval(&sub(center, x));
    let hi_payload = (-radius, center.to_vec());
    let (_, y) = proj::root_decreasing(near, 0.0, hi, hi_payload, f0, ROOT_TOL);
    // The nearest point lies within r of c, hence in K; pull it onto K exactly.
    let y = ConvexSet::Ball {
        center: center.to_vec(),
        radius,
    }
    .euclidean_projection(&y);
    finish(g, x, y)
}

fn ellipsoid_parts(g: &Gauge) -> (DMatrix<f64>, Vec<f64>) {
    match g.ball() {
        crate::gauge::Ball::Ellipsoid { matrix, center } => {
            let d = center.len();
            (DMatrix::from_fn(d, d, |i, j| matrix[i][j]), center.clone())
        }
        _ => unreachable!("ellipsoid gauge expected"),
    }
}

fn mat_apply(a: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (a * DVector::from_column_slice(v)).iter().copied().collect()
}

fn ellipsoid_gauge_to_hull(g: &Gauge, x: &[f64], vertices: &[Vec<f64>]) -> Projection {
    if vertices.len() == 1 {
        return finish(g, x, vertices[0].clone());
    }
    // Smallest t with dist₂(A(x + t c), conv(A v_k)) ≤ t.
    let (a, c) = ellipsoid_parts(g);
    let av: Vec<Vec<f64>> = vertices.iter().map(|v| mat_apply(&a, v)).collect();
    let ax = mat_apply(&a, x);
    let ac = mat_apply(&a, &c);
    let eval = |t: f64| -> (f64, Vec<f64>) {
        let q = axpy(&ax, t, &ac);
        let (p, w) = proj::project_onto_hull(&av, &q);
        (linalg::dist(&p, &q) - t, w)
    };
    let (f0, _) = eval(0.0);
    if f0 <= 0.0 {
        return Projection {
            value: 0.0,
            witness: x.to_vec(),
        };
    }
    let start = linalg::centroid(vertices);
    let hi = g.eval(&sub(&start, x));
    let hi_w = vec![1.0 / vertices.len() as f64; vertices.len()];
    let (_, w) = proj::root_decreasing(eval, 0.0, hi, (0.0, hi_w), f0, ROOT_TOL);
    let mut y = vec![0.0; x.len()];
    for (wk, v) in w.iter().zip(vertices) {
        y = axpy(&y, *wk, v);
    }
    finish(g, x, y)
}

fn ellipsoid_gauge_to_flat(g: &Gauge, x: &[f64], f: &AffineFlat) -> Projection {
    if f.basis.is_empty() {
        return finish(g, x, f.base.clone());
    }
    // Smallest t with dist₂(A(x + t c), A r + span(A u_l)) ≤ t.
    let (a, c) = ellipsoid_parts(g);
    let d = x.len();
    let k = f.basis.len();
    let au = DMatrix::from_fn(d, k, |i, j| mat_apply(&a, &f.basis[j])[i]);
    let svd = au.clone().svd(true, true);
    let ar = mat_apply(&a, &f.base);
    let ax = mat_apply(&a, x);
    let ac = mat_apply(&a, &c);
    let eval = |t: f64| -> (f64, Vec<f64>) {
        let q = axpy(&ax, t, &ac);
        let rhs = DVector::from_column_slice(&sub(&q, &ar));
        let mu = svd.solve(&rhs, 1e-14).expect("svd solve");
        let resid = &au * &mu - rhs;
        (resid.norm() - t, mu.iter().copied().collect())
    };
    let (f0, _) = eval(0.0);
    if f0 <= 0.0 {
        return Projection {
            value: 0.0,
            witness: x.to_vec(),
        };
    }
    let hi = g.eval(&sub(&f.base, x));
    let (_, mu) = proj::root_decreasing(eval, 0.0, hi, (0.0, vec![0.0; k]), f0, ROOT_TOL);
    let mut y = f.base.clone();
    for (m, u) in mu.iter().zip(&f.basis) {
        y = axpy(&y, *m, u);
    }
    finish(g, x, y)
}

fn ellipsoid_gauge_to_ball(g: &Gauge, x: &[f64], center: &[f64], radius: f64) -> Projection {
    // Smallest t with dist₂(center, {z : ‖A(z − x − t c)‖ ≤ t}) ≤ r.
    let (a, c) = ellipsoid_parts(g);
    let projector = EllipsoidProjector::new(a);
    let eval = |t: f64| -> (f64, Vec<f64>) {
        let e = axpy(x, t, &c);
        let p = projector.project(&e, t, center);
        (linalg::dist(&p, center) - radius, p)
    };
    let f0 = linalg::dist(x, center) - radius;
    if f0 <= 0.0 {
        return Projection {
            value: 0.0,
            witness: x.to_vec(),
        };
    }
    let hi = g.eval(&sub(center, x));
    let (_, y) = proj::root_decreasing(eval, 0.0, hi, (-radius, center.to_vec()), f0, ROOT_TOL);
    let y = ConvexSet::Ball {
        center: center.to_vec(),
        radius,
    }
    .euclidean_projection(&y);
    finish(g, x, y)
}
