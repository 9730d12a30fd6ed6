//! Euclidean projection primitives: nearest point of a polytope (Wolfe's
//! min-norm-point method), nonnegative least squares for cone projection,
//! nearest point of an ellipsoid, and a bracketing root finder.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::linalg::{dot, sub};

/// Nearest point to the origin in `conv(points)`, with convex weights.
pub fn min_norm_point(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let m = points.len();
    let d = points[0].len();
    let mut weights = vec![0.0; m];
    if m == 1 {
        weights[0] = 1.0;
        return (points[0].clone(), weights);
    }
    let max_sq = points.iter().map(|p| dot(p, p)).fold(0.0, f64::max).max(1e-300);
    let j0 = (0..m)
        .min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b])))
        .unwrap();
    let mut corral: Vec<usize> = vec![j0];
    let mut lam: Vec<f64> = vec![1.0];
    let mut x = points[j0].clone();
    let combine = |corral: &[usize], lam: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; d];
        for (&i, &l) in corral.iter().zip(lam) {
            for (xi, pi) in x.iter_mut().zip(&points[i]) {
                *xi += l * pi;
            }
        }
        x
    };
    for _ in 0..(50 * m + 100) {
        let xx = dot(&x, &x);
        let j = (0..m)
            .min_by(|&a, &b| dot(&x, &points[a]).total_cmp(&dot(&x, &points[b])))
            .unwrap();
        if xx - dot(&x, &points[j]) <= 1e-13 * max_sq || corral.contains(&j) {
            break;
        }
        corral.push(j);
        lam.push(0.0);
        for _ in 0..(m + 5) {
            let alpha = affine_minimizer(points, &corral);
            if alpha.iter().all(|&a| a > 1e-14) {
                lam = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (l, a) in lam.iter().zip(&alpha) {
                if *a <= 1e-14 && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lam.iter_mut().zip(&alpha) {
                *l = (1.0 - theta) * *l + theta * a;
            }
            let mut k = 0;
            let mut removed = false;
            while k < corral.len() {
                if lam[k] <= 1e-14 && corral.len() > 1 {
                    corral.remove(k);
                    lam.remove(k);
                    removed = true;
                } else {
                    k += 1;
                }
            }
            let s: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= s);
            if !removed {
                break;
            }
        }
        x = combine(&corral, &lam);
    }
    for (&i, &l) in corral.iter().zip(&lam) {
        weights[i] += l;
    }
    (x, weights)
}

/// Weights summing to one that minimize `‖Σ α_i p_i‖` over the affine hull.
fn affine_minimizer(points: &[Vec<f64>], corral: &[usize]) -> Vec<f64> {
    let k = corral.len();
    if k == 1 {
        return vec![1.0];
    }
    let d = points[0].len();
    let p0 = &points[corral[0]];
    let diffs = DMatrix::from_fn(d, k - 1, |r, c| points[corral[c + 1]][r] - p0[r]);
    let rhs = -DVector::from_column_slice(p0);
    let beta = diffs
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(k - 1));
    let mut alpha = Vec::with_capacity(k);
    alpha.push(1.0 - beta.sum());
    alpha.extend(beta.iter());
    alpha
}

/// Nearest point of `conv(vertices)` to `x`, with convex weights.
pub fn project_onto_hull(vertices: &[Vec<f64>], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let shifted: Vec<Vec<f64>> = vertices.iter().map(|v| sub(v, x)).collect();
    let (p, w) = min_norm_point(&shifted);
    (p.iter().zip(x).map(|(a, b)| a + b).collect(), w)
}

/// Nonnegative least squares `min ‖Gλ − z‖, λ ≥ 0` (Lawson–Hanson); `gens` are the columns of G.
pub fn nnls(gens: &[Vec<f64>], z: &[f64]) -> Vec<f64> {
    let m = gens.len();
    let mut lam = vec![0.0; m];
    if m == 0 {
        return lam;
    }
    let scale = 1.0 + gens.iter().map(|g| dot(g, g)).fold(0.0, f64::max).sqrt() * crate::linalg::norm(z);
    let tol = 1e-13 * scale;
    let mut passive: Vec<usize> = Vec::new();
    let residual = |lam: &[f64]| -> Vec<f64> {
        let mut r = z.to_vec();
        for (g, l) in gens.iter().zip(lam) {
            if *l != 0.0 {
                for (ri, gi) in r.iter_mut().zip(g) {
                    *ri -= l * gi;
                }
            }
        }
        r
    };
    for _ in 0..(3 * m + 10) {
        let r = residual(&lam);
        let cand = (0..m)
            .filter(|j| !passive.contains(j))
            .map(|j| (j, dot(&gens[j], &r)))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((j, wj)) = cand else { break };
        if wj <= tol {
            break;
        }
        passive.push(j);
        for _ in 0..(m + 5) {
            let s = subset_least_squares(gens, &passive, z);
            if s.iter().all(|&v| v > 0.0) {
                for (&i, &v) in passive.iter().zip(&s) {
                    lam[i] = v;
                }
                break;
            }
            let mut alpha = 1.0f64;
            for (&i, &v) in passive.iter().zip(&s) {
                if v <= 0.0 {
                    let denom = lam[i] - v;
                    if denom > 0.0 {
                        alpha = alpha.min(lam[i] / denom);
                    }
                }
            }
            for (&i, &v) in passive.iter().zip(&s) {
                lam[i] += alpha * (v - lam[i]);
            }
            let before = passive.len();
            passive.retain(|&i| {
                if lam[i] <= 1e-15 {
                    lam[i] = 0.0;
                    false
                } else {
                    true
                }
            });
            if passive.len() == before {
                // Numerical stall: drop the most negative coordinate.
                if let Some(pos) = s
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(p, _)| p)
                {
                    lam[passive[pos]] = 0.0;
                    passive.remove(pos);
                }
            }
            if passive.is_empty() {
                break;
            }
        }
    }
    lam
}

fn subset_least_squares(gens: &[Vec<f64>], subset: &[usize], z: &[f64]) -> Vec<f64> {
    let d = z.len();
    let g = DMatrix::from_fn(d, subset.len(), |r, c| gens[subset[c]][r]);
    g.svd(true, true)
        .solve(&DVector::from_column_slice(z), 1e-13)
        .map(|v| v.iter().copied().collect())
        .unwrap_or_else(|_| vec![0.0; subset.len()])
}

/// Projection onto the closed convex cone generated by `gens`.
pub fn project_onto_cone(gens: &[Vec<f64>], z: &[f64]) -> Vec<f64> {
    let lam = nnls(gens, z);
    let mut p = vec![0.0; z.len()];
    for (g, l) in gens.iter().zip(&lam) {
        for (pi, gi) in p.iter_mut().zip(g) {
            *pi += l * gi;
        }
    }
    p
}

/// Precomputed eigen-decomposition of `MᵀM` for repeated ellipsoid projections.
pub struct EllipsoidProjector {
    q: DMatrix<f64>,
    eig: DVector<f64>,
    m: DMatrix<f64>,
}

impl EllipsoidProjector {
    pub fn new(m: DMatrix<f64>) -> Self {
        let s = m.transpose() * &m;
        let se = SymmetricEigen::new(s);
        EllipsoidProjector {
            q: se.eigenvectors,
            eig: se.eigenvalues,
            m,
        }
    }

    /// Nearest point of `{z : ‖M(z − e)‖ ≤ ρ}` to `p`.
    pub fn project(&self, e: &[f64], rho: f64, p: &[f64]) -> Vec<f64> {
        let diff = DVector::from_column_slice(&sub(p, e));
        if (&self.m * &diff).norm() <= rho {
            return p.to_vec();
        }
        if rho <= 0.0 {
            return e.to_vec();
        }
        let w = self.q.transpose() * &diff;
        let g = |mu: f64| -> f64 {
            w.iter()
                .zip(self.eig.iter())
                .map(|(wi, li)| li * wi * wi / ((1.0 + mu * li) * (1.0 + mu * li)))
                .sum::<f64>()
        };
        let target = rho * rho;
        let lmin = self.eig.iter().copied().fold(f64::INFINITY, f64::min).max(1e-300);
        let lmax = self.eig.iter().copied().fold(0.0, f64::max);
        let (mut lo, mut hi) = (0.0, (lmax.sqrt() * w.norm() / rho) / lmin + 1.0);
        let mut mu = 0.5 * (lo + hi);
        for _ in 0..200 {
            let val = g(mu) - target;
            if val.abs() <= 1e-15 * target {
                break;
            }
            if val > 0.0 {
                lo = mu;
            } else {
                hi = mu;
            }
            // Newton step on g, kept inside the bracket.
            let dg: f64 = w
                .iter()
                .zip(self.eig.iter())
                .map(|(wi, li)| -2.0 * li * li * wi * wi / (1.0 + mu * li).powi(3))
                .sum();
            let newton = if dg < 0.0 { mu - val / dg } else { f64::NAN };
            mu = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 1e-15 * (1.0 + hi) {
                break;
            }
        }
        let z = DVector::from_fn(w.len(), |i, _| w[i] / (1.0 + mu * self.eig[i]));
        let z = &self.q * z;
        z.iter().zip(e).map(|(a, b)| a + b).collect()
    }
}

/// Smallest `t ∈ [lo, hi]` with `h(t) ≤ 0` for a convex `h` with `h(lo) > 0 ≥ h(hi)`.
///
/// Uses the Illinois variant of false position. `eval` returns the value and a
/// payload; the payload of the last feasible evaluation is returned.
pub fn root_decreasing<T>(
    mut eval: impl FnMut(f64) -> (f64, T),
    mut lo: f64,
    mut hi: f64,
    hi_payload: (f64, T),
    lo_value: f64,
    rel_tol: f64,
) -> (f64, T) {
    let (mut f_hi, mut best) = hi_payload;
    let mut f_lo = lo_value;
    let mut side = 0i8;
    for it in 0..300 {
        if hi - lo <= rel_tol * (1.0 + hi.abs()) {
            break;
        }
        let mut t = if it % 8 == 7 || f_lo == f_hi {
            0.5 * (lo + hi)
        } else {
            hi - f_hi * (hi - lo) / (f_hi - f_lo)
        };
        if !(t > lo && t < hi) {
            t = 0.5 * (lo + hi);
        }
        let (f, payload) = eval(t);
        if f <= 0.0 {
            hi = t;
            f_hi = f;
            best = payload;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        } else {
            lo = t;
            f_lo = f;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        }
    }
    (hi, best)
}
