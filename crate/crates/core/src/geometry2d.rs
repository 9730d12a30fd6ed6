//! Planar constructions: convex polygons, d-segments, solution loci as cone
//! intersections, sublevel sets of polyhedral objectives, and the
//! norm/asymmetry diagnostics built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::ftcore::{certify_points, solve, Certificate, Instance, Site};
use crate::gauge::Gauge;
use crate::linalg::{self, dot};
use crate::oracle::{argmin_set_matches, default_box, grid_minimize, Candidate, GridSpec};
use crate::sets::ConvexSet;

pub type P2 = [f64; 2];

/// Exposure tolerance: a ball vertex `v` lies on the face exposed by `φ`
/// when `1 − ⟨φ/γ°(φ), v⟩ ≤ FACE_TOL`.
pub const FACE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("operation needs dimension 2")]
    NotPlanar,
    #[error("operation needs singleton sites")]
    NotPointSites,
    #[error("operation needs polytopal gauges")]
    NotPolytopal,
    #[error("level {alpha} is below the minimum; the sublevel set is empty")]
    BelowMinimum { alpha: f64 },
    #[error("certificate rejected at the given point")]
    CertificateInvalid,
    #[error("functional of site {0} exposes no face of the unit ball")]
    InconsistentCertificate(usize),
    #[error("input vector must be nonzero")]
    ZeroInput,
    #[error("dimension mismatch")]
    Dimension,
    #[error("unsupported: {0}")]
    Unsupported(String),
}

fn p2(v: &[f64]) -> P2 {
    [v[0], v[1]]
}

fn sub2(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dist2(a: P2, b: P2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn segment_distance(p: P2, a: P2, b: P2) -> f64 {
    let ab = sub2(b, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist2(p, a);
    }
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    dist2(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolygonKind {
    Empty,
    Point,
    Segment,
    Area,
}

/// Convex polygon with counterclockwise vertices; points and segments are
/// kept as degenerate kinds. `rays` are recession directions of unbounded
/// cones and are empty for bounded polygons.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<P2>,
    rays: Vec<P2>,
}

impl Serialize for Polygon {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Polygon", 2)?;
        st.serialize_field("vertices", &self.vertices)?;
        st.serialize_field("rays", &self.rays)?;
        st.end()
    }
}

/// Convex hull (Andrew's monotone chain), counterclockwise; points within
/// `tol` of the chord between their neighbours are dropped.
fn hull(points: &[P2], tol: f64) -> Vec<P2> {
    let mut pts: Vec<P2> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| dist2(*a, *b) <= tol);
    if pts.len() <= 2 {
        if pts.len() == 2 && dist2(pts[0], pts[1]) <= tol {
            pts.truncate(1);
        }
        return pts;
    }
    let turn = |o: P2, a: P2, b: P2| cross(sub2(a, o), sub2(b, o)) - tol * dist2(o, b);
    let mut lower: Vec<P2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<P2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

impl Polygon {
    pub fn empty() -> Self {
        Polygon {
            vertices: Vec::new(),
            rays: Vec::new(),
        }
    }

    /// Convex hull of `points`, collapsed to a segment or a point when its
    /// width or diameter is at most `tol`.
    pub fn from_points(points: &[P2], tol: f64) -> Self {
        let mut v = hull(points, tol);
        if v.len() >= 3 {
            let width = (0..v.len())
                .map(|i| {
                    let a = v[i];
                    let b = v[(i + 1) % v.len()];
                    let len = dist2(a, b);
                    v.iter()
                        .map(|&p| cross(sub2(b, a), sub2(p, a)).abs() / len)
                        .fold(0.0, f64::max)
                })
                .fold(f64::INFINITY, f64::min);
            if width <= tol {
                let mut best = (0.0, v[0], v[0]);
                for (i, &a) in v.iter().enumerate() {
                    for &b in &v[i + 1..] {
                        if dist2(a, b) > best.0 {
                            best = (dist2(a, b), a, b);
                        }
                    }
                }
                v = hull(&[best.1, best.2], tol);
            }
        }
        if v.len() == 2 && dist2(v[0], v[1]) <= tol {
            v = vec![[(v[0][0] + v[1][0]) / 2.0, (v[0][1] + v[1][1]) / 2.0]];
        }
        Polygon {
            vertices: v,
            rays: Vec::new(),
        }
    }

    /// The cone `apex + cone(rays)`.
    pub fn cone(apex: P2, rays: Vec<P2>) -> Self {
        Polygon {
            vertices: vec![apex],
            rays,
        }
    }

    pub fn vertices(&self) -> &[P2] {
        &self.vertices
    }

    pub fn rays(&self) -> &[P2] {
        &self.rays
    }

    pub fn is_bounded(&self) -> bool {
        self.rays.is_empty()
    }

    pub fn kind(&self) -> PolygonKind {
        match self.vertices.len() {
            0 => PolygonKind::Empty,
            1 => PolygonKind::Point,
            2 => PolygonKind::Segment,
            _ => PolygonKind::Area,
        }
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        0.5 * (0..v.len())
            .map(|i| cross(v[i], v[(i + 1) % v.len()]))
            .sum::<f64>()
    }

    /// Euclidean distance from `p` (bounded polygons).
    pub fn distance(&self, p: P2) -> f64 {
        let v = &self.vertices;
        match v.len() {
            0 => f64::INFINITY,
            1 => dist2(p, v[0]),
            2 => segment_distance(p, v[0], v[1]),
            n => {
                let inside = (0..n).all(|i| cross(sub2(v[(i + 1) % n], v[i]), sub2(p, v[i])) >= 0.0);
                if inside {
                    0.0
                } else {
                    (0..n)
                        .map(|i| segment_distance(p, v[i], v[(i + 1) % n]))
                        .fold(f64::INFINITY, f64::min)
                }
            }
        }
    }

    pub fn contains(&self, p: P2, tol: f64) -> bool {
        self.distance(p) <= tol
    }

    /// Hausdorff distance between bounded polygons.
    pub fn hausdorff(&self, other: &Polygon) -> f64 {
        if self.vertices.is_empty() || other.vertices.is_empty() {
            return if self.vertices.is_empty() && other.vertices.is_empty() {
                0.0
            } else {
                f64::INFINITY
            };
        }
        let a = self
            .vertices
            .iter()
            .map(|&p| other.distance(p))
            .fold(0.0, f64::max);
        let b = other
            .vertices
            .iter()
            .map(|&p| self.distance(p))
            .fold(0.0, f64::max);
        a.max(b)
    }

    /// Vertices, edge midpoints, and the vertex centroid.
    pub fn sample_points(&self) -> Vec<P2> {
        let v = &self.vertices;
        let mut out = v.clone();
        if v.len() >= 2 {
            let n = v.len();
            let edges = if n == 2 { 1 } else { n };
            for i in 0..edges {
                let a = v[i];
                let b = v[(i + 1) % n];
                out.push([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
            }
            let c = v.iter().fold([0.0, 0.0], |s, p| [s[0] + p[0], s[1] + p[1]]);
            out.push([c[0] / n as f64, c[1] / n as f64]);
        }
        out
    }

    /// Intersection with the halfplane `⟨a, z⟩ ≤ b`, keeping points that
    /// violate it by at most `tol`.
    pub fn clip(&self, a: P2, b: f64, tol: f64) -> Polygon {
        let v = &self.vertices;
        let s = |p: P2| a[0] * p[0] + a[1] * p[1] - b;
        let mut out: Vec<P2> = Vec::new();
        match v.len() {
            0 => {}
            1 => {
                if s(v[0]) <= tol {
                    out.push(v[0]);
                }
            }
            n => {
                for i in 0..n {
                    let p = v[i];
                    let q = v[(i + 1) % n];
                    let (sp, sq) = (s(p), s(q));
                    if sp <= tol {
                        out.push(p);
                    }
                    if (sp < -tol && sq > tol) || (sp > tol && sq < -tol) {
                        let t = sp / (sp - sq);
                        out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
                    }
                }
            }
        }
        Polygon::from_points(&out, tol)
    }
}

fn check_planar_points(inst: &Instance) -> Result<Vec<P2>, GeometryError> {
    if inst.dim() != 2 {
        return Err(GeometryError::NotPlanar);
    }
    inst.point_sites()
        .map(|ps| ps.into_iter().map(p2).collect())
        .ok_or(GeometryError::NotPointSites)
}

fn check_polytopal(inst: &Instance) -> Result<(), GeometryError> {
    if inst.sites().iter().all(|s| s.gauge.is_polytope()) {
        Ok(())
    } else {
        Err(GeometryError::NotPolytopal)
    }
}

fn geometry_scale(points: &[P2]) -> f64 {
    1.0 + points
        .iter()
        .map(|p| p[0].abs().max(p[1].abs()))
        .fold(0.0, f64::max)
}

/// `z ∈ [x, y]_γ`, i.e. `γ(x − z) + γ(z − y) ≤ γ(x − y) + tol`, in any dimension.
pub fn dseg_contains(g: &Gauge, x: &[f64], y: &[f64], z: &[f64], tol: f64) -> Result<bool, GeometryError> {
    let d = g.dim();
    if x.len() != d || y.len() != d || z.len() != d {
        return Err(GeometryError::Dimension);
    }
    let lhs = g.eval(&linalg::sub(x, z)) + g.eval(&linalg::sub(z, y));
    Ok(lhs <= g.eval(&linalg::sub(x, y)) + tol)
}

/// The sublevel set `{x : f(x) ≤ α}` for planar point sites and polytopal gauges.
///
/// Each term `w_i γ_i(p_i − x)` is linear on the sectors cut out by the lines
/// through `p_i` along the ball vertices, so `f` is linear on every cell of
/// the arrangement of all these lines. The vertices of the sublevel set lie
/// on the lines; on each line `f` is piecewise linear with breakpoints at the
/// crossings, which gives them exactly.
pub fn sublevel_polygon(inst: &Instance, alpha: f64) -> Result<Polygon, GeometryError> {
    let pts = check_planar_points(inst)?;
    check_polytopal(inst)?;
    let scale = geometry_scale(&pts);
    let mut lines: Vec<(P2, P2)> = Vec::new();
    for (site, &p) in inst.sites().iter().zip(&pts) {
        for v in site.gauge.vertices() {
            let n = v[0].hypot(v[1]);
            let dir = [v[0] / n, v[1] / n];
            let dup = lines
                .iter()
                .any(|&(q, e)| cross(e, dir).abs() <= 1e-12 && cross(e, sub2(p, q)).abs() <= 1e-12 * scale);
            if !dup {
                lines.push((p, dir));
            }
        }
    }
    let f = |z: P2| inst.objective(&z);
    let ftol = 1e-9 * (1.0 + alpha.abs());
    let mut cand: Vec<P2> = Vec::new();
    for (i, &(p, e)) in lines.iter().enumerate() {
        let mut ts: Vec<f64> = lines
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .filter_map(|(_, &(q, u))| {
                let den = cross(e, u);
                (den.abs() > 1e-12).then(|| cross(sub2(q, p), u) / den)
            })
            .collect();
        ts.push(0.0);
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * scale);
        let at = |t: f64| [p[0] + t * e[0], p[1] + t * e[1]];
        let vals: Vec<f64> = ts.iter().map(|&t| f(at(t))).collect();
        for (k, (&t, &v)) in ts.iter().zip(&vals).enumerate() {
            if v <= alpha + ftol {
                cand.push(at(t));
            }
            if k + 1 < ts.len() {
                let (t2, v2) = (ts[k + 1], vals[k + 1]);
                if (v - alpha) * (v2 - alpha) < 0.0 {
                    cand.push(at(t + (alpha - v) / (v2 - v) * (t2 - t)));
                }
            }
        }
        // Beyond the outer breakpoints f is linear along the line.
        for (t_end, v_end, step) in [
            (ts[0], vals[0], -1.0),
            (ts[ts.len() - 1], vals[vals.len() - 1], 1.0),
        ] {
            let slope = f(at(t_end + step)) - v_end;
            if v_end < alpha && slope > 0.0 {
                cand.push(at(t_end + step * (alpha - v_end) / slope));
            }
        }
    }
    if cand.is_empty() {
        return Err(GeometryError::BelowMinimum { alpha });
    }
    Ok(Polygon::from_points(&cand, 1e-9 * scale))
}

/// The d-segment `[x, y]_γ` of a planar polytopal gauge, as the sublevel set
/// of `γ(x − ·) + γ(· − y)` at level `γ(x − y)`.
pub fn dseg_polygon(g: &Gauge, x: &[f64], y: &[f64]) -> Result<Polygon, GeometryError> {
    if g.dim() != 2 {
        return Err(GeometryError::NotPlanar);
    }
    if !g.is_polytope() {
        return Err(GeometryError::NotPolytopal);
    }
    if x.len() != 2 || y.len() != 2 {
        return Err(GeometryError::Dimension);
    }
    let inst = Instance::new(
        2,
        vec![
            Site::point(x.to_vec(), g.clone()),
            Site::point(y.to_vec(), g.opposite()),
        ],
        None,
    )
    .map_err(|_| GeometryError::Dimension)?;
    sublevel_polygon(&inst, g.eval(&linalg::sub(x, y)))
}

/// Points of the unit ball maximizing `⟨φ, ·⟩` (the face exposed by `φ`).
pub fn exposed_face(g: &Gauge, phi: &[f64]) -> Vec<Vec<f64>> {
    let polar = g.polar(phi);
    if polar <= 0.0 {
        return Vec::new();
    }
    let psi = linalg::scale(phi, 1.0 / polar);
    match g.ellipsoid_polar_data() {
        Some((ainv_t, c)) => {
            // Maximizer c + A⁻¹u with u = A⁻ᵀψ / ‖A⁻ᵀψ‖.
            let u = linalg::mat_vec(&ainv_t, &psi);
            let un = linalg::norm(&u);
            let d = g.dim();
            let ainv: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| ainv_t[j][i]).collect()).collect();
            vec![linalg::axpy(&c, 1.0 / un, &linalg::mat_vec(&ainv, &u))]
        }
        None => g
            .vertices()
            .iter()
            .filter(|v| 1.0 - dot(&psi, v) <= FACE_TOL)
            .cloned()
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocusMethod {
    /// Intersection of the cones `p_i − cone(face exposed by φ_i)`.
    ConeIntersection,
    /// The optimum is a site; the locus is the optimal sublevel set.
    Sublevel,
    /// The optimum is a site of a non-polytopal instance; only that site is reported.
    SiteSingleton,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Locus {
    pub polygon: Polygon,
    pub method: LocusMethod,
}

/// The solution locus of a planar point-site problem from an optimal point
/// and a certificate accepted by `certify_points`.
pub fn ft_locus_polygon(inst: &Instance, xbar: &[f64], cert: &Certificate, tol: f64) -> Result<Locus, GeometryError> {
    let pts = check_planar_points(inst)?;
    if xbar.len() != 2 {
        return Err(GeometryError::Dimension);
    }
    let report = certify_points(inst, xbar, cert, tol).map_err(|_| GeometryError::CertificateInvalid)?;
    if !report.accepted {
        return Err(GeometryError::CertificateInvalid);
    }
    let x = p2(xbar);
    let scale = geometry_scale(&pts).max(1.0 + x[0].abs().max(x[1].abs()));
    if pts.iter().any(|&p| dist2(p, x) <= tol * scale) {
        return if inst.sites().iter().all(|s| s.gauge.is_polytope()) {
            Ok(Locus {
                polygon: sublevel_polygon(inst, inst.objective(xbar))?,
                method: LocusMethod::Sublevel,
            })
        } else {
            Ok(Locus {
                polygon: Polygon::from_points(&[x], 0.0),
                method: LocusMethod::SiteSingleton,
            })
        };
    }
    let alpha = inst.objective(xbar);
    let reach = inst
        .sites()
        .iter()
        .map(|s| s.gauge.ball_radius() * alpha / s.weight)
        .fold(0.0, f64::max)
        + 1.0;
    let (cx, cy) = (pts[0][0], pts[0][1]);
    let mut poly = Polygon::from_points(
        &[
            [cx - reach, cy - reach],
            [cx + reach, cy - reach],
            [cx + reach, cy + reach],
            [cx - reach, cy + reach],
        ],
        0.0,
    );
    let eps = 1e-9 * scale;
    for (i, (site, &p)) in inst.sites().iter().zip(&pts).enumerate() {
        let psi = linalg::neg(&cert.phis[i]);
        let face = exposed_face(&site.gauge, &psi);
        if face.is_empty() {
            return Err(GeometryError::InconsistentCertificate(i));
        }
        let gens: Vec<P2> = face.iter().map(|f| [-f[0], -f[1]]).collect();
        // Widest pair of generators spans the cone.
        let mut pair = (gens[0], gens[0]);
        for &a in &gens {
            for &b in &gens {
                if cross(a, b) > cross(pair.0, pair.1) {
                    pair = (a, b);
                }
            }
        }
        let (g1, g2) = pair;
        let mut halfplanes: Vec<P2> = Vec::new();
        if cross(g1, g2) > 1e-12 * dot(&g1, &g1).max(dot(&g2, &g2)) {
            halfplanes.push([g1[1], -g1[0]]);
            halfplanes.push([-g2[1], g2[0]]);
        } else {
            let g = g1;
            halfplanes.push([g[1], -g[0]]);
            halfplanes.push([-g[1], g[0]]);
            halfplanes.push([-g[0], -g[1]]);
        }
        for a in halfplanes {
            let n = a[0].hypot(a[1]);
            let a = [a[0] / n, a[1] / n];
            poly = poly.clip(a, a[0] * p[0] + a[1] * p[1], eps);
        }
    }
    Ok(Locus {
        polygon: poly,
        method: LocusMethod::ConeIntersection,
    })
}

/// `v = p_i + λ w` with `w` an extreme point of `−B_i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremeWitness {
    pub site: usize,
    /// Extreme point of the site the representation starts from.
    pub base: Vec<f64>,
    pub lambda: f64,
    pub w: Vec<f64>,
}

const EXTREME_TOL: f64 = 1e-7;

fn find_ray_representation(
    v: P2,
    bases: &[(usize, P2)],
    inst: &Instance,
    lambda_max: impl Fn(usize) -> f64,
) -> Option<ExtremeWitness> {
    for &(i, p) in bases {
        let negball: Vec<P2> = inst.sites()[i]
            .gauge
            .vertices()
            .iter()
            .map(|u| [-u[0], -u[1]])
            .collect();
        if dist2(v, p) <= EXTREME_TOL {
            return Some(ExtremeWitness {
                site: i,
                base: p.to_vec(),
                lambda: 0.0,
                w: negball[0].to_vec(),
            });
        }
        for &w in &negball {
            let rel = sub2(v, p);
            let lambda = (rel[0] * w[0] + rel[1] * w[1]) / (w[0] * w[0] + w[1] * w[1]);
            let miss = dist2(rel, [lambda * w[0], lambda * w[1]]);
            if miss <= EXTREME_TOL && lambda >= -EXTREME_TOL && lambda <= lambda_max(i) + EXTREME_TOL {
                return Some(ExtremeWitness {
                    site: i,
                    base: p.to_vec(),
                    lambda,
                    w: w.to_vec(),
                });
            }
        }
    }
    None
}

/// Searches a representation `v = p_i + λ w` with `λ ∈ [0, α/w_i]` and `w`
/// an extreme point of `−B_i`, for a vertex `v` of a planar sublevel polygon.
pub fn verify_extreme_point_form(inst: &Instance, alpha: f64, v: &[f64]) -> Result<Option<ExtremeWitness>, GeometryError> {
    let pts = check_planar_points(inst)?;
    check_polytopal(inst)?;
    if v.len() != 2 {
        return Err(GeometryError::Dimension);
    }
    let bases: Vec<(usize, P2)> = pts.into_iter().enumerate().collect();
    Ok(find_ray_representation(p2(v), &bases, inst, |i| {
        alpha / inst.sites()[i].weight
    }))
}

/// The set-site analogue: `v = p + λ w` with `p` an extreme point of some
/// `K_i`, `λ ≥ 0`, and `w` an extreme point of `−B_i`.
pub fn verify_extreme_point_form_sets(inst: &Instance, v: &[f64]) -> Result<Option<ExtremeWitness>, GeometryError> {
    if inst.dim() != 2 {
        return Err(GeometryError::NotPlanar);
    }
    check_polytopal(inst)?;
    if v.len() != 2 {
        return Err(GeometryError::Dimension);
    }
    let mut bases = Vec::new();
    for (i, s) in inst.sites().iter().enumerate() {
        match &s.set {
            ConvexSet::Singleton(p) => bases.push((i, p2(p))),
            ConvexSet::VPolytope(vs) => {
                let pts: Vec<P2> = vs.iter().map(|q| p2(q)).collect();
                for q in hull(&pts, 0.0) {
                    bases.push((i, q));
                }
            }
            ConvexSet::Flat(f) if f.flat_dim() == 0 => bases.push((i, p2(f.base()))),
            ConvexSet::Flat(_) => {}
            ConvexSet::Ball { .. } => {
                return Err(GeometryError::Unsupported(
                    "balls have infinitely many extreme points".into(),
                ))
            }
        }
    }
    Ok(find_ray_representation(p2(v), &bases, inst, |_| f64::INFINITY))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TriangleReport {
    /// `γ(x + y) = γ(x) + γ(y)`.
    pub additive: bool,
    /// 21 sampled points of `[x/γ(x), y/γ(y)]` lie on the unit sphere.
    pub segment_on_sphere: bool,
}

pub fn triangle_equality_face(g: &Gauge, x: &[f64], y: &[f64]) -> Result<TriangleReport, GeometryError> {
    if x.len() != g.dim() || y.len() != g.dim() {
        return Err(GeometryError::Dimension);
    }
    let (gx, gy) = (g.eval(x), g.eval(y));
    if gx == 0.0 || gy == 0.0 {
        return Err(GeometryError::ZeroInput);
    }
    let additive = (g.eval(&linalg::add(x, y)) - gx - gy).abs() <= 1e-9 * (1.0 + gx + gy);
    let a = linalg::scale(x, 1.0 / gx);
    let b = linalg::scale(y, 1.0 / gy);
    let segment_on_sphere = (0..=20).all(|k| {
        let s = k as f64 / 20.0;
        let z = linalg::axpy(&linalg::scale(&a, 1.0 - s), s, &b);
        (g.eval(&z) - 1.0).abs() <= 1e-7
    });
    Ok(TriangleReport {
        additive,
        segment_on_sphere,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatEdgeCase {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub z_in_dsegment: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymmetryCase {
    pub x0: Vec<f64>,
    pub ratio: f64,
    /// The oracle's minimizers of `γ(x₀ − ·) + γ(−·)` collapse to the origin.
    pub locus_is_origin: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub is_norm: bool,
    pub strictly_convex: bool,
    /// Norms: on every trial pair, the straight segment and sampled d-segment
    /// points reach the two-point optimum.
    pub segments_optimal: Option<bool>,
    /// Gauges that are not norms: the asymmetry witness and its locus check.
    pub asymmetry: Option<AsymmetryCase>,
    /// Ellipsoid gauges: d-segments contain no sampled point off `[x, y]`.
    pub dsegments_straight: Option<bool>,
    /// Polytopal gauges: a d-segment point off the straight segment built
    /// from a flat piece of the sphere.
    pub flat_edge: Option<FlatEdgeCase>,
}

/// Norm and strict-convexity diagnostics of a planar gauge on `trials`
/// random pairs drawn from a seeded generator.
pub fn norm_characterization_report(g: &Gauge, trials: usize, seed: u64) -> Result<NormReport, GeometryError> {
    if g.dim() != 2 {
        return Err(GeometryError::NotPlanar);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let is_norm = g.is_symmetric();
    let strictly_convex = !g.is_polytope();
    let mut segments_optimal = None;
    let mut asymmetry = None;
    if is_norm {
        let mut ok = true;
        for _ in 0..trials {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let inst = Instance::points(g, &[x.clone(), y.clone()]).map_err(|_| GeometryError::Dimension)?;
            let best = solve(&inst).map_err(|e| GeometryError::Unsupported(e.to_string()))?.value;
            let tol = 1e-8 * (1.0 + best);
            let mut samples: Vec<Vec<f64>> = (0..=4)
                .map(|k| linalg::axpy(&x, k as f64 / 4.0, &linalg::sub(&y, &x)))
                .collect();
            if g.is_polytope() {
                let poly = dseg_polygon(g, &x, &y)?;
                samples.extend(poly.sample_points().iter().map(|p| p.to_vec()));
            }
            ok &= samples.iter().all(|z| inst.objective(z) <= best + tol);
        }
        segments_optimal = Some(ok);
    } else {
        let (x0, ratio) = g.asymmetry_witness();
        let inst = Instance::points(g, &[x0.clone(), vec![0.0, 0.0]]).map_err(|_| GeometryError::Dimension)?;
        let (lo, hi) = default_box(&inst);
        let spec = GridSpec::with_target_cell(lo, hi, 40, 1e-3).map_err(|e| GeometryError::Unsupported(e.to_string()))?;
        let out = grid_minimize(&inst, &spec).map_err(|e| GeometryError::Unsupported(e.to_string()))?;
        let origin = Candidate::Points(vec![vec![0.0, 0.0]]);
        let matches = argmin_set_matches(&inst, &out, &origin, 1e-2).unwrap_or(false);
        asymmetry = Some(AsymmetryCase {
            x0,
            ratio,
            locus_is_origin: matches && !out.multiple_minimizers(),
        });
    }
    let mut dsegments_straight = None;
    let mut flat_edge = None;
    if strictly_convex {
        let mut ok = true;
        for _ in 0..trials {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let s: f64 = rng.gen_range(0.0..1.0);
            let on = linalg::axpy(&x, s, &linalg::sub(&y, &x));
            let dir = linalg::sub(&y, &x);
            let off = linalg::axpy(&on, 0.05, &[-dir[1], dir[0]]);
            ok &= dseg_contains(g, &x, &y, &on, 1e-9)?;
            ok &= !dseg_contains(g, &x, &y, &off, 1e-9)?;
        }
        dsegments_straight = Some(ok);
    } else {
        let vs = g.vertices();
        let facets = g.facets();
        // Two vertices sharing a facet span a segment of the sphere.
        'search: for (i, a) in vs.iter().enumerate() {
            for b in &vs[i + 1..] {
                if facets
                    .iter()
                    .any(|f| (dot(f, a) - 1.0).abs() <= FACE_TOL && (dot(f, b) - 1.0).abs() <= FACE_TOL)
                {
                    let x = linalg::add(a, b);
                    let y = vec![0.0, 0.0];
                    let z = a.clone();
                    let z_in_dsegment = dseg_contains(g, &x, &y, &z, 1e-9)?;
                    flat_edge = Some(FlatEdgeCase {
                        x,
                        y,
                        z,
                        z_in_dsegment,
                    });
                    break 'search;
                }
            }
        }
    }
    Ok(NormReport {
        is_norm,
        strictly_convex,
        segments_optimal,
        asymmetry,
        dsegments_straight,
        flat_edge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five_form() -> Gauge {
        Gauge::hpolytope(vec![
            vec![-0.5, 0.0],
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![0.5, 1.0],
            vec![0.5, -1.0],
        ])
        .unwrap()
    }

    fn five_form_pair() -> Instance {
        Instance::points(&five_form(), &[vec![-2.0, 2.0], vec![-2.0, -2.0]]).unwrap()
    }

    #[test]
    fn hull_and_kinds() {
        let sq = Polygon::from_points(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]], 1e-12);
        assert_eq!(sq.kind(), PolygonKind::Area);
        assert!((sq.area() - 1.0).abs() < 1e-15);
        let seg = Polygon::from_points(&[[0.0, 0.0], [1.0, 1.0], [0.5, 0.5]], 1e-12);
        assert_eq!(seg.kind(), PolygonKind::Segment);
        let pt = Polygon::from_points(&[[1.0, 1.0], [1.0 + 1e-13, 1.0]], 1e-12);
        assert_eq!(pt.kind(), PolygonKind::Point);
        let sliver = Polygon::from_points(&[[0.0, 0.0], [2.0, 0.0], [1.0, 1e-12]], 1e-9);
        assert_eq!(sliver.kind(), PolygonKind::Segment);
        assert!((sq.distance([2.0, 0.5]) - 1.0).abs() < 1e-15);
        let clipped = sq.clip([1.0, 0.0], 0.5, 0.0);
        assert!((clipped.area() - 0.5).abs() < 1e-15);
        assert!((sq.hausdorff(&clipped) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dseg_membership_examples() {
        let l1 = Gauge::l1(2).unwrap();
        assert!(dseg_contains(&l1, &[0.0, 0.0], &[1.0, 1.0], &[1.0, 0.0], 1e-12).unwrap());
        let g = five_form();
        let (x, y) = ([-2.0, 2.0], [-2.0, -2.0]);
        assert!(dseg_contains(&g, &x, &y, &x, 0.0).unwrap());
        assert!(dseg_contains(&g, &x, &y, &y, 0.0).unwrap());
        assert!(!dseg_contains(&g, &x, &y, &[0.0, 0.0], 1e-9).unwrap());
    }

    #[test]
    fn dseg_polygons() {
        let g = five_form();
        let p = dseg_polygon(&g, &[-2.0, 2.0], &[-2.0, -2.0]).unwrap();
        let seg = Polygon::from_points(&[[-2.0, 2.0], [-2.0, -2.0]], 0.0);
        assert!(p.hausdorff(&seg) < 1e-9, "{:?}", p);

        let l1 = Gauge::l1(2).unwrap();
        let p = dseg_polygon(&l1, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let sq = Polygon::from_points(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], 0.0);
        assert!(p.hausdorff(&sq) < 1e-9, "{:?}", p);

        let verts: Vec<Vec<f64>> = (0..16)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 16.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let g16 = Gauge::vpolytope(verts).unwrap();
        let p = dseg_polygon(&g16, &[0.0, 0.0], &[2.0, 0.0]).unwrap();
        assert!(p.contains([1.0, 0.0], 1e-12));
        assert!(p.contains([0.0, 0.0], 1e-9) && p.contains([2.0, 0.0], 1e-9));
        assert!(p.vertices().iter().all(|v| v[1].abs() < 0.2));
    }

    #[test]
    fn sublevel_examples() {
        let inst = five_form_pair();
        let p = sublevel_polygon(&inst, 2.0).unwrap();
        assert_eq!(p.kind(), PolygonKind::Point);
        assert!(dist2(p.vertices()[0], [0.0, 0.0]) < 1e-9);
        let p25 = sublevel_polygon(&inst, 2.5).unwrap();
        let p3 = sublevel_polygon(&inst, 3.0).unwrap();
        assert!(p25.area() > 0.0 && p25.distance([0.0, 0.0]) == 0.0);
        assert!(p25.vertices().iter().all(|&v| p3.contains(v, 1e-9)));
        assert!(matches!(
            sublevel_polygon(&inst, 1.9),
            Err(GeometryError::BelowMinimum { .. })
        ));

        let l1 = Gauge::l1(2).unwrap();
        let one = Instance::points(&l1, &[vec![0.0, 0.0]]).unwrap();
        let p = sublevel_polygon(&one, 1.0).unwrap();
        let ball = Polygon::from_points(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]], 0.0);
        assert!(p.hausdorff(&ball) < 1e-12);
    }

    #[test]
    fn locus_examples() {
        let inst = five_form_pair();
        let cert = Certificate::from_norming(vec![vec![0.0, 0.5], vec![0.0, -0.5]]);
        let l = ft_locus_polygon(&inst, &[0.0, 0.0], &cert, 1e-9).unwrap();
        assert_eq!(l.method, LocusMethod::ConeIntersection);
        assert_eq!(l.polygon.kind(), PolygonKind::Point);
        assert!(dist2(l.polygon.vertices()[0], [0.0, 0.0]) < 1e-9);

        let e = Gauge::euclidean(2).unwrap();
        let h = 3f64.sqrt() / 2.0;
        let pts = [vec![1.0, 0.0], vec![-0.5, h], vec![-0.5, -h]];
        let inst = Instance::points(&e, &pts).unwrap();
        let cert = Certificate::from_norming(pts.to_vec());
        let l = ft_locus_polygon(&inst, &[0.0, 0.0], &cert, 1e-9).unwrap();
        assert_eq!(l.polygon.kind(), PolygonKind::Point);
        assert!(dist2(l.polygon.vertices()[0], [0.0, 0.0]) < 1e-9);

        let l1 = Gauge::l1(2).unwrap();
        let inst = Instance::points(&l1, &[vec![-1.0, -1.0], vec![1.0, 1.0]]).unwrap();
        let cert = Certificate::from_norming(vec![vec![-1.0, -1.0], vec![1.0, 1.0]]);
        let l = ft_locus_polygon(&inst, &[0.0, 0.0], &cert, 1e-9).unwrap();
        let sq = Polygon::from_points(&[[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]], 0.0);
        assert!(l.polygon.hausdorff(&sq) < 1e-9, "{:?}", l.polygon);

        let bad = Certificate::from_norming(vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(
            ft_locus_polygon(&inst, &[0.0, 0.0], &bad, 1e-9),
            Err(GeometryError::CertificateInvalid)
        );
    }

    #[test]
    fn extreme_point_forms() {
        let inst = five_form_pair();
        let p = sublevel_polygon(&inst, 3.0).unwrap();
        for v in p.vertices() {
            assert!(verify_extreme_point_form(&inst, 3.0, v).unwrap().is_some(), "{v:?}");
        }
        let w = verify_extreme_point_form(&inst, 3.0, &[-2.0, 2.0]).unwrap().unwrap();
        assert_eq!(w.lambda, 0.0);

        let g = Gauge::linf(2).unwrap();
        let seg = ConvexSet::segment(vec![-4.0, -1.0], vec![4.0, -1.0]).unwrap();
        let sets = Instance::new(2, vec![Site::new(seg, g, 1.0)], None).unwrap();
        assert_eq!(
            verify_extreme_point_form(&sets, 4.0, &[1.0, 1.0]),
            Err(GeometryError::NotPointSites)
        );
    }

    #[test]
    fn triangle_equality_examples() {
        let l1 = Gauge::l1(2).unwrap();
        let r = triangle_equality_face(&l1, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(r.additive && r.segment_on_sphere);
        let e = Gauge::euclidean(2).unwrap();
        let r = triangle_equality_face(&e, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(!r.additive && !r.segment_on_sphere);
        let r = triangle_equality_face(&five_form(), &[-2.0, 2.0], &[-2.0, -2.0]).unwrap();
        assert!(r.additive && r.segment_on_sphere);
        assert_eq!(
            triangle_equality_face(&e, &[0.0, 0.0], &[0.0, 1.0]),
            Err(GeometryError::ZeroInput)
        );
    }

    #[test]
    fn norm_reports() {
        let r = norm_characterization_report(&Gauge::l1(2).unwrap(), 5, 1).unwrap();
        assert!(r.is_norm && !r.strictly_convex);
        assert_eq!(r.segments_optimal, Some(true));
        assert!(r.flat_edge.unwrap().z_in_dsegment);

        let r = norm_characterization_report(&Gauge::euclidean(2).unwrap(), 5, 2).unwrap();
        assert!(r.is_norm && r.strictly_convex);
        assert_eq!(r.segments_optimal, Some(true));
        assert_eq!(r.dsegments_straight, Some(true));

        let r = norm_characterization_report(&five_form(), 5, 3).unwrap();
        assert!(!r.is_norm);
        let a = r.asymmetry.unwrap();
        assert!((a.ratio - 4.0).abs() < 1e-12);
        assert!(a.locus_is_origin);
    }
}
