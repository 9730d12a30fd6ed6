//! Brute-force grid minimization used to cross-check solvers and loci.
//!
//! Cells whose convex lower bound exceeds the best value found so far are
//! discarded; survivors are split into `4^d` children per level. For a cell
//! with center `c` and half-diagonal `r`, the bound is
//! `f(c) − ‖Σ g_i‖ r − Σ_{j∈J} w_j L_j r`, where `g_i` are verified
//! subgradients of the terms and `J` collects terms without one. The bound is
//! valid for convex `f`, so a cell containing a minimizer is never discarded.

use serde::Serialize;
use thiserror::Error;

use crate::ftcore::{Instance, Site};
use crate::geometry2d::Polygon;
use crate::linalg::{self, dot, norm, sub};
use crate::sets::{ConvexSet, Support};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("grid box is degenerate or has the wrong dimension")]
    DegenerateBox,
    #[error("resolution must be at least 3 and levels at least 1")]
    BadResolution,
    #[error("candidate set does not match the instance dimension")]
    CandidateDimension,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: usize,
    pub levels: usize,
}

/// Children per axis when a cell is refined.
pub const SUBDIVISION: usize = 4;

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, resolution: usize, levels: usize) -> Result<Self, OracleError> {
        if lo.is_empty()
            || lo.len() != hi.len()
            || lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite())
        {
            return Err(OracleError::DegenerateBox);
        }
        if resolution < 3 || levels < 1 {
            return Err(OracleError::BadResolution);
        }
        Ok(GridSpec {
            lo,
            hi,
            resolution,
            levels,
        })
    }

    /// Largest edge of a final-level cell.
    pub fn final_cell_size(&self) -> f64 {
        let w = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .fold(0.0, f64::max);
        w / self.resolution as f64 / (SUBDIVISION as f64).powi(self.levels as i32 - 1)
    }

    /// Smallest level count whose final cells are at most `target` wide.
    pub fn with_target_cell(lo: Vec<f64>, hi: Vec<f64>, resolution: usize, target: f64) -> Result<Self, OracleError> {
        let mut spec = GridSpec::new(lo, hi, resolution, 1)?;
        while spec.final_cell_size() > target {
            spec.levels += 1;
        }
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub value: f64,
    /// Best cell center.
    pub point: Vec<f64>,
    /// Final-level cell centers that may contain a minimizer.
    pub cells: Vec<Vec<f64>>,
    pub cell_size: f64,
    /// Smallest lower bound over the final cells.
    pub lower_bound: f64,
}

impl OracleResult {
    /// Largest distance between two near-optimal cells.
    pub fn spread(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.cells.iter().enumerate() {
            for b in &self.cells[i + 1..] {
                best = best.max(linalg::dist(a, b));
            }
        }
        best
    }

    /// True when the near-optimal cells span more than a few cell widths,
    /// i.e. the minimizer set is not a single point at this resolution.
    pub fn multiple_minimizers(&self) -> bool {
        self.spread() > 8.0 * self.cell_size * (self.point.len() as f64).sqrt()
    }
}

/// Default search box: the intersection of the boxes that must contain a
/// minimizer because of each bounded site, and the constraint's box if bounded.
pub fn default_box(inst: &Instance) -> (Vec<f64>, Vec<f64>) {
    let d = inst.dim();
    let anchors: Vec<Vec<f64>> = inst.sites().iter().map(|s| s.set.anchor()).collect();
    let mut c0 = linalg::centroid(&anchors);
    if let Some(k0) = inst.constraint() {
        c0 = k0.euclidean_projection(&c0);
    }
    let f0 = inst.objective(&c0);
    let mut lo = vec![f64::NEG_INFINITY; d];
    let mut hi = vec![f64::INFINITY; d];
    let mut any = false;
    let mut clip = |pts: &[Vec<f64>], reach: f64| {
        for k in 0..d {
            let a = pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min) - reach;
            let b = pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max) + reach;
            lo[k] = lo[k].max(a);
            hi[k] = hi[k].min(b);
        }
    };
    for s in inst.sites() {
        if s.set.is_bounded() {
            any = true;
            clip(&s.set.reference_points(), s.gauge.ball_radius() * f0 / s.weight);
        }
    }
    if let Some(k0) = inst.constraint().filter(|k| k.is_bounded()) {
        any = true;
        clip(&k0.reference_points(), 0.0);
    }
    if !any {
        let reach = inst
            .sites()
            .iter()
            .map(|s| s.gauge.ball_radius() * f0 / s.weight)
            .fold(0.0, f64::max);
        clip(&anchors, reach);
    }
    // Pad so that points on the boundary of the box sit inside a cell.
    for k in 0..d {
        let pad = 1e-3 * (hi[k] - lo[k]).max(1.0);
        lo[k] -= pad;
        hi[k] += pad;
    }
    (lo, hi)
}

enum Slope {
    Gradient(Vec<f64>),
    Bound(f64),
}

/// Value of `w · dist` and a verified subgradient when one is at hand.
fn term_slope(site: &Site, x: &[f64]) -> (f64, Slope) {
    let p = site.set.distance(&site.gauge, x);
    let w = site.weight;
    let value = w * p.value;
    if p.value == 0.0 {
        return (0.0, Slope::Gradient(vec![0.0; x.len()]));
    }
    let u = sub(&p.witness, x);
    let candidates: Vec<Vec<f64>> = match site.gauge.ellipsoid_polar_data() {
        Some(_) => vec![site.gauge.norming_functional(&u)],
        None => {
            let g = site.gauge.eval(&u);
            site.gauge
                .facets()
                .iter()
                .filter(|a| g - dot(a, &u) <= 1e-9 * (1.0 + g))
                .cloned()
                .collect()
        }
    };
    let px_scale = 1.0 + value.abs();
    for n in candidates {
        let phi = linalg::scale(&n, -w);
        if let Support::Finite(h) = site.set.support(&phi) {
            if (h + value - dot(&phi, x)).abs() <= 1e-9 * (px_scale + dot(&phi, x).abs()) {
                return (value, Slope::Gradient(phi));
            }
        }
    }
    (value, Slope::Bound(w * site.gauge.lipschitz()))
}

struct Objective<'a> {
    inst: &'a Instance,
    penalty: f64,
}

impl Objective<'_> {
    fn new(inst: &Instance) -> Objective<'_> {
        let lip: f64 = inst.sites().iter().map(|s| s.weight * s.gauge.lipschitz()).sum();
        Objective {
            inst,
            penalty: 2.0 * lip + 1.0,
        }
    }

    /// Penalized value and the lower bound over a ball of radius `r` around `x`.
    fn eval(&self, x: &[f64], r: f64) -> (f64, f64) {
        let mut value = 0.0;
        let mut grad = vec![0.0; x.len()];
        let mut loose = 0.0;
        for s in self.inst.sites() {
            let (v, slope) = term_slope(s, x);
            value += v;
            match slope {
                Slope::Gradient(g) => grad = linalg::add(&grad, &g),
                Slope::Bound(l) => loose += l,
            }
        }
        if let Some(k0) = self.inst.constraint() {
            let p = k0.euclidean_projection(x);
            let dist = linalg::dist(x, &p);
            if dist > 0.0 {
                value += self.penalty * dist;
                grad = linalg::axpy(&grad, self.penalty / dist, &sub(x, &p));
            }
        }
        (value, value - (norm(&grad) + loose) * r)
    }
}

/// Multi-level grid search for the minimum of `f` (over `K₀` when present,
/// through an exact penalty).
pub fn grid_minimize(inst: &Instance, spec: &GridSpec) -> Result<OracleResult, OracleError> {
    let d = inst.dim();
    if spec.lo.len() != d {
        return Err(OracleError::DegenerateBox);
    }
    let obj = Objective::new(inst);
    let mut h: Vec<f64> = spec
        .lo
        .iter()
        .zip(&spec.hi)
        .map(|(a, b)| (b - a) / spec.resolution as f64)
        .collect();
    let mut centers = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        centers.push(
            (0..d)
                .map(|k| spec.lo[k] + (idx[k] as f64 + 0.5) * h[k])
                .collect::<Vec<f64>>(),
        );
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < spec.resolution {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    let mut best = (f64::INFINITY, Vec::new());
    let mut level = 1;
    loop {
        let r = 0.5 * norm(&h);
        let evals: Vec<(f64, f64)> = centers.iter().map(|c| obj.eval(c, r)).collect();
        for (c, &(v, _)) in centers.iter().zip(&evals) {
            if v < best.0 {
                best = (v, c.clone());
            }
        }
        let slack = 1e-12 * (1.0 + best.0.abs());
        let keep: Vec<(Vec<f64>, f64)> = centers
            .into_iter()
            .zip(evals)
            .filter(|(_, (_, lb))| *lb <= best.0 + slack)
            .map(|(c, (_, lb))| (c, lb))
            .collect();
        if level == spec.levels {
            let cell_size = h.iter().copied().fold(0.0, f64::max);
            let lower_bound = keep.iter().map(|(_, lb)| *lb).fold(f64::INFINITY, f64::min);
            return Ok(OracleResult {
                value: best.0,
                point: best.1,
                cells: keep.into_iter().map(|(c, _)| c).collect(),
                cell_size,
                lower_bound,
            });
        }
        let child_h: Vec<f64> = h.iter().map(|v| v / SUBDIVISION as f64).collect();
        let mut next = Vec::with_capacity(keep.len() * SUBDIVISION.pow(d as u32));
        for (c, _) in &keep {
            let mut idx = vec![0usize; d];
            loop {
                next.push(
                    (0..d)
                        .map(|k| c[k] - 0.5 * h[k] + (idx[k] as f64 + 0.5) * child_h[k])
                        .collect::<Vec<f64>>(),
                );
                let mut k = 0;
                while k < d {
                    idx[k] += 1;
                    if idx[k] < SUBDIVISION {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == d {
                    break;
                }
            }
        }
        centers = next;
        h = child_h;
        level += 1;
    }
}

/// Candidate minimizer sets for `argmin_set_matches`.
#[derive(Clone, Debug, PartialEq)]
pub enum Candidate {
    Points(Vec<Vec<f64>>),
    Segment(Vec<f64>, Vec<f64>),
    Polygon(Polygon),
}

impl Candidate {
    fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Candidate::Points(ps) => ps.iter().map(|p| linalg::dist(p, x)).fold(f64::INFINITY, f64::min),
            Candidate::Segment(a, b) => ConvexSet::VPolytope(vec![a.clone(), b.clone()]).euclidean_distance(x),
            Candidate::Polygon(p) => p.distance([x[0], x[1]]),
        }
    }

    fn samples(&self) -> Vec<Vec<f64>> {
        match self {
            Candidate::Points(ps) => ps.clone(),
            Candidate::Segment(a, b) => (0..=10)
                .map(|k| linalg::axpy(a, k as f64 / 10.0, &sub(b, a)))
                .collect(),
            Candidate::Polygon(p) => p.sample_points().into_iter().map(|q| q.to_vec()).collect(),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Candidate::Points(ps) => ps.first().map(|p| p.len()),
            Candidate::Segment(a, _) => Some(a.len()),
            Candidate::Polygon(_) => Some(2),
        }
    }
}

/// Two-sided comparison of the oracle's near-optimal cells with a candidate
/// minimizer set: every cell lies within `tol + cell_size` of the candidate,
/// and sampled candidate points reach the oracle value within `tol`.
pub fn argmin_set_matches(
    inst: &Instance,
    out: &OracleResult,
    candidate: &Candidate,
    tol: f64,
) -> Result<bool, OracleError> {
    if candidate.dim() != Some(inst.dim()) {
        return Err(OracleError::CandidateDimension);
    }
    let near = out
        .cells
        .iter()
        .all(|c| candidate.distance(c) <= tol + out.cell_size);
    let optimal = candidate
        .samples()
        .iter()
        .all(|p| inst.objective(p) <= out.value + tol);
    Ok(near && optimal)
}
