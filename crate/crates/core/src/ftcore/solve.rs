use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{find_certificate, Certificate, Instance, InstanceError};
use crate::barrier::{BarrierOptions, ConeRow, ConicProgram, LinearRow};
use crate::gauge::Ball;
use crate::linalg::{self, dot, norm, scale, sub};
use crate::lp::{Cmp, Lp, LpOutcome};
use crate::sets::ConvexSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Exact linear program (polytopal gauges, polyhedral sites).
    Lp,
    /// Log-barrier path following on the conic reformulation.
    Barrier,
    /// Projected subgradient with `α₀/√k` steps.
    Subgradient,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Forces a method; `None` picks the LP when it applies and the barrier otherwise.
    pub method: Option<Method>,
    pub start: Option<Vec<f64>>,
    pub subgradient_iters: usize,
    /// Tolerance handed to `find_certificate`; `None` skips certification.
    pub certify_tol: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: None,
            start: None,
            subgradient_iters: 100_000,
            certify_tol: Some(1e-6),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Solution {
    pub point: Vec<f64>,
    pub value: f64,
    pub certificate: Option<Certificate>,
    pub method: Method,
    pub iterations: usize,
    /// LP: 0; barrier: duality-gap bound; subgradient: last improvement of the best value.
    pub residual: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("objective keeps decreasing along {direction:?}; the infimum may not be attained")]
    NonattainmentSuspected {
        point: Vec<f64>,
        value: f64,
        direction: Vec<f64>,
    },
    #[error("method {0:?} does not apply to this instance")]
    Unsupported(Method),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub fn solve(inst: &Instance) -> Result<Solution, SolveError> {
    solve_with(inst, &SolveOptions::default())
}

pub fn solve_with(inst: &Instance, opts: &SolveOptions) -> Result<Solution, SolveError> {
    if let Some(s) = &opts.start {
        inst.check_point(s)?;
    }
    let method = opts.method.unwrap_or(if lp_applies(inst) {
        Method::Lp
    } else {
        Method::Barrier
    });
    let mut sol = match method {
        Method::Lp => {
            if !lp_applies(inst) {
                return Err(SolveError::Unsupported(Method::Lp));
            }
            solve_lp(inst)?
        }
        Method::Barrier => match solve_barrier(inst, opts.start.as_deref()) {
            Ok(s) => s,
            Err(SolveError::Numerical(_)) if opts.method.is_none() => {
                run_subgradient(inst, opts)?
            }
            Err(e) => return Err(e),
        },
        Method::Subgradient => run_subgradient(inst, opts)?,
    };
    if let Some(tol) = opts.certify_tol {
        sol.certificate = find_certificate(inst, &sol.point, tol).ok();
    }
    Ok(sol)
}

fn lp_applies(inst: &Instance) -> bool {
    inst.sites()
        .iter()
        .all(|s| s.gauge.is_polytope() && s.set.is_polyhedral())
        && inst.constraint().map_or(true, |k| k.is_polyhedral())
}

/// Coordinates affine in the decision vector: `constant + Σ coef · z_j`.
#[derive(Clone, Debug)]
struct AffinePoint {
    constant: Vec<f64>,
    terms: Vec<Vec<(usize, f64)>>,
}

impl AffinePoint {
    fn constant(p: &[f64]) -> Self {
        AffinePoint {
            constant: p.to_vec(),
            terms: vec![Vec::new(); p.len()],
        }
    }

    fn eval(&self, z: &[f64]) -> Vec<f64> {
        self.constant
            .iter()
            .zip(&self.terms)
            .map(|(c, t)| c + t.iter().map(|&(j, v)| v * z[j]).sum::<f64>())
            .collect()
    }

    fn minus(&self, other: &AffinePoint) -> AffinePoint {
        AffinePoint {
            constant: sub(&self.constant, &other.constant),
            terms: self
                .terms
                .iter()
                .zip(&other.terms)
                .map(|(a, b)| {
                    let mut t = a.clone();
                    t.extend(b.iter().map(|&(j, v)| (j, -v)));
                    t
                })
                .collect(),
        }
    }

    /// `⟨a, ·⟩` as sparse coefficients and a constant.
    fn functional(&self, a: &[f64]) -> (Vec<(usize, f64)>, f64) {
        let mut coef = Vec::new();
        for (ak, t) in a.iter().zip(&self.terms) {
            coef.extend(t.iter().map(|&(j, v)| (j, ak * v)));
        }
        (coef, dot(a, &self.constant))
    }
}

/// Accumulates a linear program; also used for the certificate search.
struct LpBuilder {
    lp: Lp,
}

impl LpBuilder {
    fn point_in(&mut self, set: Option<&ConvexSet>, d: usize) -> AffinePoint {
        match set {
            None => {
                let v = self.lp.add_vars(d, true);
                AffinePoint {
                    constant: vec![0.0; d],
                    terms: v.iter().map(|&j| vec![(j, 1.0)]).collect(),
                }
            }
            Some(ConvexSet::Singleton(p)) => AffinePoint::constant(p),
            Some(ConvexSet::VPolytope(vs)) => {
                let lam = self.lp.add_vars(vs.len(), false);
                self.lp
                    .add_row(lam.iter().map(|&j| (j, 1.0)).collect(), Cmp::Eq, 1.0);
                AffinePoint {
                    constant: vec![0.0; d],
                    terms: (0..d)
                        .map(|k| lam.iter().zip(vs).map(|(&j, v)| (j, v[k])).collect())
                        .collect(),
                }
            }
            Some(ConvexSet::Flat(f)) => {
                let mu = self.lp.add_vars(f.basis().len(), true);
                AffinePoint {
                    constant: f.base().to_vec(),
                    terms: (0..d)
                        .map(|k| mu.iter().zip(f.basis()).map(|(&j, u)| (j, u[k])).collect())
                        .collect(),
                }
            }
            Some(ConvexSet::Ball { .. }) => unreachable!("balls are not LP-representable"),
        }
    }
}

fn solve_lp(inst: &Instance) -> Result<Solution, SolveError> {
    // min Σ w_i t_i  s.t.  ⟨a_j, y_i − x⟩ ≤ t_i,  y_i ∈ K_i,  x ∈ K₀.
    let d = inst.dim();
    let mut b = LpBuilder { lp: Lp::new() };
    let x = b.point_in(inst.constraint(), d);
    for site in inst.sites() {
        let y = b.point_in(Some(&site.set), d);
        let u = y.minus(&x);
        let t = b.lp.add_var(true);
        b.lp.set_cost(t, site.weight);
        for a in site.gauge.facets() {
            let (mut coef, c) = u.functional(a);
            coef.push((t, -1.0));
            b.lp.add_row(coef, Cmp::Le, -c);
        }
    }
    match b.lp.solve() {
        LpOutcome::Optimal(sol) => {
            let point = x.eval(&sol.x);
            Ok(Solution {
                value: inst.objective(&point),
                point,
                certificate: None,
                method: Method::Lp,
                iterations: sol.pivots,
                residual: 0.0,
            })
        }
        LpOutcome::Unbounded => Err(SolveError::NonattainmentSuspected {
            point: vec![f64::NAN; d],
            value: f64::NEG_INFINITY,
            direction: vec![f64::NAN; d],
        }),
        LpOutcome::Infeasible => Err(SolveError::Numerical("location LP reported infeasible".into())),
        LpOutcome::Stalled => Err(SolveError::Numerical("location LP hit the pivot limit".into())),
    }
}

struct ConicBuilder {
    prog: ConicProgram,
    z0: Vec<f64>,
}

impl ConicBuilder {
    fn var(&mut self, init: f64) -> usize {
        self.prog.n += 1;
        self.prog.cost.push(0.0);
        self.z0.push(init);
        self.prog.n - 1
    }

    fn free_point(&mut self, init: &[f64]) -> AffinePoint {
        let vars: Vec<usize> = init.iter().map(|&v| self.var(v)).collect();
        AffinePoint {
            constant: vec![0.0; init.len()],
            terms: vars.iter().map(|&j| vec![(j, 1.0)]).collect(),
        }
    }

    /// A point of `set` with a strictly feasible initial value.
    fn point_in(&mut self, set: &ConvexSet) -> AffinePoint {
        let d = set.dim();
        match set {
            ConvexSet::Singleton(p) => AffinePoint::constant(p),
            ConvexSet::VPolytope(vs) if vs.len() == 1 => AffinePoint::constant(&vs[0]),
            ConvexSet::VPolytope(vs) => {
                // The last weight is eliminated: y = v_m + Σ_{k<m} λ_k (v_k − v_m).
                let m = vs.len();
                let last = &vs[m - 1];
                let lam: Vec<usize> = (0..m - 1).map(|_| self.var(1.0 / m as f64)).collect();
                for &j in &lam {
                    self.prog.linear.push(LinearRow {
                        g: vec![(j, -1.0)],
                        h: 0.0,
                    });
                }
                self.prog.linear.push(LinearRow {
                    g: lam.iter().map(|&j| (j, 1.0)).collect(),
                    h: 1.0,
                });
                AffinePoint {
                    constant: last.clone(),
                    terms: (0..d)
                        .map(|k| {
                            lam.iter()
                                .zip(vs)
                                .map(|(&j, v)| (j, v[k] - last[k]))
                                .collect()
                        })
                        .collect(),
                }
            }
            ConvexSet::Flat(f) => {
                let mu: Vec<usize> = f.basis().iter().map(|_| self.var(0.0)).collect();
                AffinePoint {
                    constant: f.base().to_vec(),
                    terms: (0..d)
                        .map(|k| mu.iter().zip(f.basis()).map(|(&j, u)| (j, u[k])).collect())
                        .collect(),
                }
            }
            ConvexSet::Ball { center, radius } => {
                let p = self.free_point(center);
                self.prog.cones.push(ConeRow {
                    m_rows: p.terms.clone(),
                    m0: linalg::neg(center),
                    e: vec![],
                    e0: *radius,
                });
                p
            }
        }
    }
}

fn solve_barrier(inst: &Instance, start: Option<&[f64]>) -> Result<Solution, SolveError> {
    let d = inst.dim();
    let mut b = ConicBuilder {
        prog: ConicProgram::default(),
        z0: Vec::new(),
    };
    let x = match inst.constraint() {
        Some(k) => b.point_in(k),
        None => {
            let init = match start {
                Some(s) => s.to_vec(),
                None => {
                    let anchors: Vec<Vec<f64>> = inst.sites().iter().map(|s| s.set.anchor()).collect();
                    linalg::centroid(&anchors)
                }
            };
            b.free_point(&init)
        }
    };
    for site in inst.sites() {
        let y = b.point_in(&site.set);
        let u = y.minus(&x);
        let u0 = u.eval(&b.z0);
        let t = b.var(site.gauge.eval(&u0) + 1.0);
        b.prog.cost[t] = site.weight;
        match site.gauge.ball() {
            Ball::Ellipsoid { matrix, center } => {
                // γ(u) ≤ t  ⟺  ‖A(u − t c)‖ ≤ t.
                let mut m_rows = Vec::with_capacity(d);
                let mut m0 = Vec::with_capacity(d);
                for row in matrix {
                    let (mut coef, c) = u.functional(row);
                    coef.push((t, -dot(row, center)));
                    m_rows.push(coef);
                    m0.push(c);
                }
                b.prog.cones.push(ConeRow {
                    m_rows,
                    m0,
                    e: vec![(t, 1.0)],
                    e0: 0.0,
                });
            }
            _ => {
                for a in site.gauge.facets() {
                    let (mut coef, c) = u.functional(a);
                    coef.push((t, -1.0));
                    b.prog.linear.push(LinearRow { g: coef, h: -c });
                }
            }
        }
    }
    let res = b
        .prog
        .solve(&b.z0, &BarrierOptions::default())
        .ok_or_else(|| SolveError::Numerical("barrier iterates left the domain".into()))?;
    let point = x.eval(&res.z);
    if point.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::Numerical("barrier produced a non-finite point".into()));
    }
    if !res.converged {
        let scale_ref = 1.0 + b.z0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if linalg::max_abs(&point) > 1e8 * scale_ref {
            let direction = scale(&point, 1.0 / norm(&point));
            return Err(SolveError::NonattainmentSuspected {
                value: inst.objective(&point),
                point,
                direction,
            });
        }
        return Err(SolveError::Numerical(format!(
            "barrier stopped with gap {:.3e}",
            res.gap
        )));
    }
    Ok(Solution {
        value: inst.objective(&point),
        point,
        certificate: None,
        method: Method::Barrier,
        iterations: res.newton_steps,
        residual: res.gap,
    })
}

fn run_subgradient(inst: &Instance, opts: &SolveOptions) -> Result<Solution, SolveError> {
    let start = match &opts.start {
        Some(s) => s.clone(),
        None => {
            let anchors: Vec<Vec<f64>> = inst.sites().iter().map(|s| s.set.anchor()).collect();
            linalg::centroid(&anchors)
        }
    };
    let (point, value, iterations, residual) = subgradient(inst, &start, opts.subgradient_iters);
    Ok(Solution {
        point,
        value,
        certificate: None,
        method: Method::Subgradient,
        iterations,
        residual,
    })
}

/// Projected subgradient method with normalized steps `α₀/√k`, where
/// `α₀ = f(x₀) / Σ w_i`; returns the best iterate, its value, the iteration
/// count, and the last improvement of the best value.
pub fn subgradient(inst: &Instance, start: &[f64], max_iter: usize) -> (Vec<f64>, f64, usize, f64) {
    let project = |x: Vec<f64>| match inst.constraint() {
        Some(k) => k.euclidean_projection(&x),
        None => x,
    };
    let mut x = project(start.to_vec());
    let mut best = (x.clone(), inst.objective(&x));
    let alpha0 = best.1 / inst.total_weight();
    let mut last_gain = 0.0;
    if alpha0 == 0.0 {
        return (best.0, best.1, 0, 0.0);
    }
    let mut k = 0;
    while k < max_iter {
        k += 1;
        let mut g = vec![0.0; x.len()];
        for site in inst.sites() {
            let p = site.set.distance(&site.gauge, &x);
            if p.value > 0.0 {
                // At a point inside K_i the zero functional is taken.
                let phi = site.gauge.norming_functional(&sub(&p.witness, &x));
                g = linalg::axpy(&g, -site.weight, &phi);
            }
        }
        let gn = norm(&g);
        if gn == 0.0 {
            break;
        }
        let step = alpha0 / (k as f64).sqrt();
        x = project(linalg::axpy(&x, -step / gn, &g));
        let f = inst.objective(&x);
        if f < best.1 {
            last_gain = best.1 - f;
            best = (x.clone(), f);
        }
    }
    (best.0, best.1, k, last_gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ftcore::Site;
    use crate::gauge::Gauge;

    fn five_form_pair() -> Instance {
        let g = Gauge::hpolytope(vec![
            vec![-0.5, 0.0],
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![0.5, 1.0],
            vec![0.5, -1.0],
        ])
        .unwrap();
        Instance::points(&g, &[vec![-2.0, 2.0], vec![-2.0, -2.0]]).unwrap()
    }

    #[test]
    fn lp_solves_five_form_example() {
        let s = solve(&five_form_pair()).unwrap();
        assert_eq!(s.method, Method::Lp);
        assert!(linalg::norm(&s.point) < 1e-9);
        assert!((s.value - 2.0).abs() < 1e-12);
        assert!(s.certificate.is_some());
    }

    #[test]
    fn two_point_euclidean() {
        let e = Gauge::euclidean(2).unwrap();
        let inst = Instance::points(&e, &[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let s = solve(&inst).unwrap();
        assert_eq!(s.method, Method::Barrier);
        assert!((s.value - 2.0).abs() < 1e-9);
        assert!(s.point[1].abs() < 1e-6 && s.point[0] > -1e-6 && s.point[0] < 2.0 + 1e-6);
    }

    #[test]
    fn heron_reflection() {
        let e = Gauge::euclidean(2).unwrap();
        let axis = ConvexSet::flat(vec![0.0, 0.0], vec![vec![1.0, 0.0]]).unwrap();
        let inst = Instance::points(&e, &[vec![0.0, 1.0], vec![2.0, 1.0]])
            .unwrap()
            .with_constraint(Some(axis))
            .unwrap();
        let s = solve(&inst).unwrap();
        assert!((s.value - 2.0 * 2f64.sqrt()).abs() < 1e-9);
        assert!((s.point[0] - 1.0).abs() < 1e-6 && s.point[1].abs() < 1e-12);
        let cert = s.certificate.expect("certificate");
        assert!(cert.phi0.is_some());
    }

    #[test]
    fn torricelli_point_of_equilateral_triangle() {
        let e = Gauge::euclidean(2).unwrap();
        let h = 3f64.sqrt() / 2.0;
        let inst = Instance::points(&e, &[vec![1.0, 0.0], vec![-0.5, h], vec![-0.5, -h]]).unwrap();
        let s = solve(&inst).unwrap();
        assert!(linalg::norm(&s.point) < 1e-7);
        assert!((s.value - 3.0).abs() < 1e-10);
    }

    #[test]
    fn subgradient_agrees_with_barrier() {
        let g = Gauge::ellipsoid(vec![vec![1.0, 0.3], vec![0.3, 2.0]], vec![0.2, 0.1]).unwrap();
        let inst = Instance::new(
            2,
            vec![
                Site::point(vec![0.0, 0.0], g.clone()),
                Site::new(ConvexSet::ball(vec![3.0, 1.0], 0.5).unwrap(), g.clone(), 2.0),
                Site::new(
                    ConvexSet::segment(vec![1.0, 3.0], vec![2.0, 4.0]).unwrap(),
                    g,
                    1.0,
                ),
            ],
            None,
        )
        .unwrap();
        let b = solve(&inst).unwrap();
        let (_, v, _, _) = subgradient(&inst, &[0.0, 0.0], 20_000);
        assert!(v >= b.value - 1e-9);
        assert!(v - b.value < 1e-3, "{} vs {}", v, b.value);
    }
}
