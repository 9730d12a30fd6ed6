//! Gauges given by their unit balls.
//!
//! A gauge is the Minkowski functional of a compact convex ball `B` with the
//! origin in its interior: `γ(x) = inf { λ ≥ 0 : x ∈ λB }`. Three ball
//! representations are supported: an intersection of halfspaces
//! `⟨a_j, z⟩ ≤ 1`, the convex hull of finitely many points, and a shifted
//! ellipsoid `‖A(z − c)‖ ≤ 1`. The pairing between points and functionals is
//! the standard dot product.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{dot, neg, norm, scale, solve_square};
use crate::lp::{Cmp, Lp, LpOutcome};

/// Relative tolerance for deciding that a constraint is active.
pub const ACTIVE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaugeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("gauge needs at least one generator")]
    Empty,
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("non-finite coordinate in gauge data")]
    NonFinite,
    #[error("unit ball is unbounded")]
    Unbounded,
    #[error("origin is not an interior point of the unit ball")]
    OriginNotInterior,
    #[error("ellipsoid matrix is not symmetric")]
    NotSymmetric,
    #[error("ellipsoid matrix is not positive definite")]
    NotPositiveDefinite,
}

/// Defining data of the unit ball.
#[derive(Clone, Debug, PartialEq)]
pub enum Ball {
    HPolytope { functionals: Vec<Vec<f64>> },
    VPolytope { vertices: Vec<Vec<f64>> },
    Ellipsoid { matrix: Vec<Vec<f64>>, center: Vec<f64> },
}

#[derive(Clone, Debug)]
struct EllipsoidData {
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    ac: DVector<f64>,
    /// `1 − ‖Ac‖²`, positive because the origin is interior.
    alpha: f64,
    center: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Gauge {
    dim: usize,
    ball: Ball,
    ellipsoid: Option<EllipsoidData>,
    facets: OnceLock<Vec<Vec<f64>>>,
    vertices: OnceLock<Vec<Vec<f64>>>,
}

impl PartialEq for Gauge {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.ball == other.ball
    }
}

/// Generator description of the subdifferential `∂γ(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum NormingSet {
    /// Convex hull of the listed functionals.
    Hull(Vec<Vec<f64>>),
    /// The whole polar ball `{φ : γ°(φ) ≤ 1}` (only for `x = 0` and a smooth ball).
    PolarBall,
}

fn check_finite(vs: &[Vec<f64>]) -> Result<(), GaugeError> {
    if vs.iter().flatten().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GaugeError::NonFinite)
    }
}

fn check_rows(rows: &[Vec<f64>]) -> Result<usize, GaugeError> {
    let d = rows.first().ok_or(GaugeError::Empty)?.len();
    if d == 0 {
        return Err(GaugeError::ZeroDimension);
    }
    for r in rows {
        if r.len() != d {
            return Err(GaugeError::DimensionMismatch {
                expected: d,
                got: r.len(),
            });
        }
    }
    check_finite(rows)?;
    Ok(d)
}

/// True when `{z : ⟨r, z⟩ ≤ 1 ∀ r ∈ rows}` is bounded, checked by maximizing
/// each `±e_i` over it.
fn halfspace_system_bounded(rows: &[Vec<f64>], d: usize) -> bool {
    for i in 0..d {
        for sign in [1.0, -1.0] {
            let mut lp = Lp::new();
            let z = lp.add_vars(d, true);
            lp.set_cost(z[i], -sign);
            for r in rows {
                lp.add_row(z.iter().zip(r).map(|(&j, &a)| (j, a)).collect(), Cmp::Le, 1.0);
            }
            if !matches!(lp.solve(), LpOutcome::Optimal(_)) {
                return false;
            }
        }
    }
    true
}

fn for_each_combination(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Vertices of the bounded polytope `{z : ⟨r, z⟩ ≤ 1 ∀ r ∈ rows}` by
/// enumerating `d`-subsets of tight constraints.
///
/// Applied to ball functionals it yields ball vertices; applied to ball
/// vertices it yields the vertices of the polar, which are the irredundant
/// facet functionals of the ball.
pub fn enumerate_vertices(rows: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for_each_combination(rows.len(), d, &mut |idx| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
        let Some(z) = solve_square(&a, &vec![1.0; d]) else {
            return;
        };
        let scale_z = 1.0 + norm(&z);
        if rows.iter().any(|r| dot(r, &z) > 1.0 + 1e-9 * scale_z) {
            return;
        }
        if out
            .iter()
            .all(|v| crate::linalg::dist(v, &z) > 1e-9 * scale_z)
        {
            out.push(z);
        }
    });
    out
}

impl Gauge {
    /// Ball `{z : ⟨a_j, z⟩ ≤ 1}`; rejected if unbounded.
    pub fn hpolytope(functionals: Vec<Vec<f64>>) -> Result<Self, GaugeError> {
        let d = check_rows(&functionals)?;
        if !halfspace_system_bounded(&functionals, d) {
            return Err(GaugeError::Unbounded);
        }
        Ok(Self::from_ball(d, Ball::HPolytope { functionals }, None))
    }

    /// Ball `conv(v_k)`; rejected unless the origin is interior.
    pub fn vpolytope(vertices: Vec<Vec<f64>>) -> Result<Self, GaugeError> {
        let d = check_rows(&vertices)?;
        // 0 ∈ int conv(V) iff the polar {a : ⟨v_k, a⟩ ≤ 1} is bounded.
        if !halfspace_system_bounded(&vertices, d) {
            return Err(GaugeError::OriginNotInterior);
        }
        Ok(Self::from_ball(d, Ball::VPolytope { vertices }, None))
    }

    /// Ball `{z : ‖A(z − c)‖₂ ≤ 1}` with `A` symmetric positive definite.
    pub fn ellipsoid(matrix: Vec<Vec<f64>>, center: Vec<f64>) -> Result<Self, GaugeError> {
        let d = center.len();
        if d == 0 {
            return Err(GaugeError::ZeroDimension);
        }
        if matrix.len() != d {
            return Err(GaugeError::DimensionMismatch {
                expected: d,
                got: matrix.len(),
            });
        }
        check_rows(&matrix)?;
        check_finite(std::slice::from_ref(&center))?;
        if matrix[0].len() != d {
            return Err(GaugeError::DimensionMismatch {
                expected: d,
                got: matrix[0].len(),
            });
        }
        let a = DMatrix::from_fn(d, d, |i, j| matrix[i][j]);
        let asym = (&a - a.transpose()).abs().max();
        if asym > 1e-12 * (1.0 + a.abs().max()) {
            return Err(GaugeError::NotSymmetric);
        }
        if a.clone().cholesky().is_none() {
            return Err(GaugeError::NotPositiveDefinite);
        }
        let a_inv = a.clone().try_inverse().ok_or(GaugeError::NotPositiveDefinite)?;
        let ac = &a * DVector::from_column_slice(&center);
        let alpha = 1.0 - ac.norm_squared();
        if alpha <= 1e-12 {
            return Err(GaugeError::OriginNotInterior);
        }
        let data = EllipsoidData {
            a,
            a_inv,
            ac,
            alpha,
            center: center.clone(),
        };
        Ok(Self::from_ball(d, Ball::Ellipsoid { matrix, center }, Some(data)))
    }

    pub fn euclidean(d: usize) -> Result<Self, GaugeError> {
        let matrix = (0..d).map(|i| crate::linalg::unit(d, i)).collect();
        Self::ellipsoid(matrix, vec![0.0; d])
    }

    /// ℓ¹ norm: the cross-polytope `conv(±e_i)`.
    pub fn l1(d: usize) -> Result<Self, GaugeError> {
        let mut v = Vec::with_capacity(2 * d);
        for i in 0..d {
            v.push(crate::linalg::unit(d, i));
            v.push(neg(&crate::linalg::unit(d, i)));
        }
        Self::vpolytope(v)
    }

    /// ℓ∞ norm: the cube `{|z_i| ≤ 1}`.
    pub fn linf(d: usize) -> Result<Self, GaugeError> {
        let mut f = Vec::with_capacity(2 * d);
        for i in 0..d {
            f.push(crate::linalg::unit(d, i));
            f.push(neg(&crate::linalg::unit(d, i)));
        }
        Self::hpolytope(f)
    }

    pub fn from_ball_data(ball: Ball) -> Result<Self, GaugeError> {
        match ball {
            Ball::HPolytope { functionals } => Self::hpolytope(functionals),
            Ball::VPolytope { vertices } => Self::vpolytope(vertices),
            Ball::Ellipsoid { matrix, center } => Self::ellipsoid(matrix, center),
        }
    }

    fn from_ball(dim: usize, ball: Ball, ellipsoid: Option<EllipsoidData>) -> Self {
        Gauge {
            dim,
            ball,
            ellipsoid,
            facets: OnceLock::new(),
            vertices: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn is_polytope(&self) -> bool {
        self.ellipsoid.is_none()
    }

    /// Exactly the Euclidean norm (identity matrix, zero center).
    pub fn is_euclidean(&self) -> bool {
        match &self.ball {
            Ball::Ellipsoid { matrix, center } => {
                center.iter().all(|&c| c == 0.0)
                    && matrix.iter().enumerate().all(|(i, row)| {
                        row.iter()
                            .enumerate()
                            .all(|(j, &v)| v == if i == j { 1.0 } else { 0.0 })
                    })
            }
            _ => false,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), GaugeError> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(GaugeError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            })
        }
    }

    /// For an ellipsoid ball, the rows of `A⁻ᵀ` and the center `c`, so that
    /// `γ°(φ) = ⟨φ, c⟩ + ‖A⁻ᵀφ‖₂`.
    pub fn ellipsoid_polar_data(&self) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        self.ellipsoid.as_ref().map(|e| {
            let rows = (0..self.dim)
                .map(|i| (0..self.dim).map(|j| e.a_inv[(j, i)]).collect())
                .collect();
            (rows, e.center.clone())
        })
    }

    /// Facet functionals `a_j` with `B = {z : ⟨a_j, z⟩ ≤ 1}` (polytopes only).
    ///
    /// For an H-polytope these are the given functionals, possibly redundant;
    /// for a V-polytope they are computed once and cached.
    pub fn facets(&self) -> &[Vec<f64>] {
        match &self.ball {
            Ball::HPolytope { functionals } => functionals,
            Ball::VPolytope { vertices } => self
                .facets
                .get_or_init(|| enumerate_vertices(vertices, self.dim)),
            Ball::Ellipsoid { .. } => &[],
        }
    }

    /// Extreme points of the ball (polytopes only), computed once and cached.
    pub fn vertices(&self) -> &[Vec<f64>] {
        match &self.ball {
            Ball::Ellipsoid { .. } => &[],
            _ => self
                .vertices
                .get_or_init(|| enumerate_vertices(self.facets(), self.dim)),
        }
    }

    /// `γ(x)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.ellipsoid {
            None => self
                .facets()
                .iter()
                .map(|a| dot(a, x))
                .fold(0.0, f64::max),
            Some(e) => {
                let ax = &e.a * DVector::from_column_slice(x);
                let q = ax.norm_squared();
                if q == 0.0 {
                    return 0.0;
                }
                let b = ax.dot(&e.ac);
                let disc = (b * b + e.alpha * q).sqrt();
                if b >= 0.0 {
                    q / (b + disc)
                } else {
                    (disc - b) / e.alpha
                }
            }
        }
    }

    pub fn try_eval(&self, x: &[f64]) -> Result<f64, GaugeError> {
        self.check_dim(x)?;
        Ok(self.eval(x))
    }

    /// Polar value `γ°(φ) = max { ⟨φ, z⟩ : z ∈ B }`.
    pub fn polar(&self, phi: &[f64]) -> f64 {
        debug_assert_eq!(phi.len(), self.dim);
        match &self.ellipsoid {
            None => {
                let pts: &[Vec<f64>] = match &self.ball {
                    Ball::VPolytope { vertices } => vertices,
                    _ => self.vertices(),
                };
                pts.iter().map(|v| dot(phi, v)).fold(f64::NEG_INFINITY, f64::max)
            }
            Some(e) => {
                let w = e.a_inv.transpose() * DVector::from_column_slice(phi);
                dot(phi, &e.center) + w.norm()
            }
        }
    }

    pub fn try_polar(&self, phi: &[f64]) -> Result<f64, GaugeError> {
        self.check_dim(phi)?;
        Ok(self.polar(phi))
    }

    /// Generators of `∂γ(x)`: for `x ≠ 0` the norming functionals of `x`.
    pub fn norming_functionals(&self, x: &[f64]) -> Result<NormingSet, GaugeError> {
        self.check_dim(x)?;
        let g = self.eval(x);
        if g == 0.0 {
            return Ok(match &self.ellipsoid {
                None => NormingSet::Hull(self.facets().to_vec()),
                Some(_) => NormingSet::PolarBall,
            });
        }
        Ok(match &self.ellipsoid {
            None => NormingSet::Hull(
                self.facets()
                    .iter()
                    .filter(|a| g - dot(a, x) <= ACTIVE_TOL * (1.0 + g))
                    .cloned()
                    .collect(),
            ),
            Some(_) => NormingSet::Hull(vec![self.smooth_norming(x, g)]),
        })
    }

    /// One norming functional of `x ≠ 0` (the unique one for an ellipsoid).
    pub fn norming_functional(&self, x: &[f64]) -> Vec<f64> {
        let g = self.eval(x);
        match &self.ellipsoid {
            Some(_) => self.smooth_norming(x, g),
            None => self
                .facets()
                .iter()
                .max_by(|a, b| dot(a, x).total_cmp(&dot(b, x)))
                .cloned()
                .expect("polytope has facets"),
        }
    }

    fn smooth_norming(&self, x: &[f64], g: f64) -> Vec<f64> {
        let e = self.ellipsoid.as_ref().expect("ellipsoid");
        // Outward normal AᵀA(z − c) at the boundary point z = x/γ(x), scaled to ⟨φ, z⟩ = 1.
        let z = DVector::from_column_slice(&scale(x, 1.0 / g));
        let c = DVector::from_column_slice(&e.center);
        let n = e.a.transpose() * (&e.a * (&z - c));
        let s = n.dot(&z);
        n.iter().map(|v| v / s).collect()
    }

    /// The opposite gauge `x ↦ γ(−x)`, whose ball is `−B`.
    pub fn opposite(&self) -> Gauge {
        match &self.ball {
            Ball::HPolytope { functionals } => {
                let g = Self::from_ball(
                    self.dim,
                    Ball::HPolytope {
                        functionals: functionals.iter().map(|a| neg(a)).collect(),
                    },
                    None,
                );
                if let Some(v) = self.vertices.get() {
                    let _ = g.vertices.set(v.iter().map(|p| neg(p)).collect());
                }
                g
            }
            Ball::VPolytope { vertices } => {
                let g = Self::from_ball(
                    self.dim,
                    Ball::VPolytope {
                        vertices: vertices.iter().map(|v| neg(v)).collect(),
                    },
                    None,
                );
                if let Some(f) = self.facets.get() {
                    let _ = g.facets.set(f.iter().map(|a| neg(a)).collect());
                }
                g
            }
            Ball::Ellipsoid { matrix, center } => {
                Self::ellipsoid(matrix.clone(), neg(center)).expect("negated center stays valid")
            }
        }
    }

    /// The gauge `w·γ`, whose ball is `B / w`.
    pub fn scaled(&self, w: f64) -> Gauge {
        assert!(w > 0.0 && w.is_finite());
        match &self.ball {
            Ball::HPolytope { functionals } => Self::from_ball(
                self.dim,
                Ball::HPolytope {
                    functionals: functionals.iter().map(|a| scale(a, w)).collect(),
                },
                None,
            ),
            Ball::VPolytope { vertices } => Self::from_ball(
                self.dim,
                Ball::VPolytope {
                    vertices: vertices.iter().map(|v| scale(v, 1.0 / w)).collect(),
                },
                None,
            ),
            Ball::Ellipsoid { matrix, center } => Self::ellipsoid(
                matrix.iter().map(|r| scale(r, w)).collect(),
                scale(center, 1.0 / w),
            )
            .expect("scaling keeps the ellipsoid valid"),
        }
    }

    /// Euclidean Lipschitz constant: `γ(z) ≤ L‖z‖₂`.
    pub fn lipschitz(&self) -> f64 {
        match &self.ellipsoid {
            None => self.facets().iter().map(|a| norm(a)).fold(0.0, f64::max),
            Some(e) => e.a.singular_values().max() / (1.0 - e.ac.norm()),
        }
    }

    /// Largest Euclidean norm of a ball point: `‖z‖₂ ≤ R·γ(z)`.
    pub fn ball_radius(&self) -> f64 {
        match &self.ellipsoid {
            None => self.vertices().iter().map(|v| norm(v)).fold(0.0, f64::max),
            Some(e) => e.a_inv.singular_values().max() + norm(&e.center),
        }
    }

    /// True when `B = −B`.
    pub fn is_symmetric(&self) -> bool {
        match &self.ball {
            Ball::Ellipsoid { center, .. } => norm(center) <= 1e-12,
            _ => {
                let vs = self.vertices();
                let tol = 1e-9 * (1.0 + self.ball_radius());
                vs.iter()
                    .all(|v| vs.iter().any(|w| crate::linalg::dist(w, &neg(v)) <= tol))
            }
        }
    }

    /// A maximizer `x0` of `γ(−x)/γ(x)` with `γ(x0) = 1`, and the maximal ratio.
    pub fn asymmetry_witness(&self) -> (Vec<f64>, f64) {
        if self.is_symmetric() {
            let mut x0 = crate::linalg::unit(self.dim, 0);
            x0 = scale(&x0, 1.0 / self.eval(&x0));
            return (x0, 1.0);
        }
        match &self.ellipsoid {
            None => {
                // γ(−·) is convex, so its maximum over B sits at a vertex, where γ = 1.
                let mut best = (Vec::new(), f64::NEG_INFINITY);
                for v in self.vertices() {
                    let r = self.eval(&neg(v)) / self.eval(v);
                    if r > best.1 {
                        best = (v.clone(), r);
                    }
                }
                best
            }
            Some(e) => self.ellipsoid_asymmetry(e),
        }
    }

    fn ellipsoid_asymmetry(&self, e: &EllipsoidData) -> (Vec<f64>, f64) {
        // Boundary points are x(s) = c + A⁻¹s with ‖s‖ = 1; maximize g(s) = γ(−x(s)).
        let d = self.dim;
        let c = DVector::from_column_slice(&e.center);
        let point = |s: &DVector<f64>| -> Vec<f64> { (&c + &e.a_inv * s).iter().copied().collect() };
        let value = |s: &DVector<f64>| -> f64 { self.eval(&neg(&point(s))) };
        let mut starts: Vec<DVector<f64>> = Vec::new();
        if d == 2 {
            for k in 0..360 {
                let t = k as f64 * std::f64::consts::PI / 180.0;
                starts.push(DVector::from_column_slice(&[t.cos(), t.sin()]));
            }
        } else {
            // Fibonacci-like deterministic spread plus coordinate directions.
            for i in 0..d {
                for sgn in [1.0, -1.0] {
                    let mut s = DVector::zeros(d);
                    s[i] = sgn;
                    starts.push(s);
                }
            }
            let mut state = 0x9e37_79b9_7f4a_7c15u64;
            for _ in 0..400 {
                let s = DVector::from_fn(d, |_, _| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state as f64 / u64::MAX as f64) * 2.0 - 1.0
                });
                if s.norm() > 1e-3 {
                    starts.push(s.normalize());
                }
            }
        }
        starts.sort_by(|a, b| value(b).total_cmp(&value(a)));
        let mut best = (starts[0].clone(), value(&starts[0]));
        for s0 in starts.into_iter().take(4) {
            let mut s = s0;
            let mut g = value(&s);
            let mut step = 1.0;
            for _ in 0..5000 {
                let y = neg(&point(&s));
                let psi = DVector::from_vec(self.norming_functional(&y));
                let grad = -(e.a_inv.transpose() * psi);
                let tangent = &grad - &s * grad.dot(&s);
                if tangent.norm() <= 1e-13 * (1.0 + grad.norm()) {
                    break;
                }
                let mut improved = false;
                while step > 1e-16 {
                    let cand = (&s + &tangent * step).normalize();
                    let gc = value(&cand);
                    if gc > g {
                        s = cand;
                        g = gc;
                        step *= 2.0;
                        improved = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !improved {
                    break;
                }
            }
            if g > best.1 {
                best = (s, g);
            }
        }
        (point(&best.0), best.1.max(1.0))
    }
}

/// `φ` rescaled so that `γ°(φ) = 1`.
pub fn normalize_polar(g: &Gauge, phi: &[f64]) -> Vec<f64> {
    scale(phi, 1.0 / g.polar(phi))
}

/// Residuals of the norming conditions `γ°(φ) = 1`, `⟨φ, x⟩ = γ(x)`.
pub fn norming_residual(g: &Gauge, x: &[f64], phi: &[f64]) -> (f64, f64) {
    ((g.polar(phi) - 1.0).abs(), (dot(phi, x) - g.eval(x)).abs())
}
