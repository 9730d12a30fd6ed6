use serde::Serialize;
use thiserror::Error;

use super::{Certificate, Instance, InstanceError};
use crate::barrier::{BarrierOptions, ConeRow, ConicProgram, LinearRow};
use crate::linalg::{self, dot, neg, norm, sub};
use crate::lp::{Cmp, Lp};
use crate::sets::{ConvexSet, Support};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub site: Option<usize>,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub accepted: bool,
    pub checks: Vec<Check>,
}

impl CertificateReport {
    fn new(checks: Vec<Check>) -> Self {
        CertificateReport {
            accepted: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("site {0} is not a singleton")]
    NonSingletonSite(usize),
    #[error("certificate has {got} functionals for {expected} sites")]
    WrongLength { expected: usize, got: usize },
    #[error("functional dimension mismatch")]
    FunctionalDimension,
    #[error("instance has no constraint set")]
    MissingConstraint,
    #[error("point is outside the constraint set")]
    NotInConstraint,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("no certificate within tolerance (best slack {slack:.3e}): {reason}")]
pub struct NotFound {
    pub slack: f64,
    pub reason: String,
}

fn check(label: &str, site: Option<usize>, residual: f64, bound: f64) -> Check {
    Check {
        label: label.to_string(),
        site,
        residual,
        passed: residual <= bound,
    }
}

fn validate(inst: &Instance, x: &[f64], cert: &Certificate) -> Result<(), CertifyError> {
    inst.check_point(x)?;
    let n = inst.sites().len();
    if cert.phis.len() != n {
        return Err(CertifyError::WrongLength {
            expected: n,
            got: cert.phis.len(),
        });
    }
    let d = inst.dim();
    if cert.phis.iter().any(|p| p.len() != d) || cert.phi0.as_ref().is_some_and(|p| p.len() != d) {
        return Err(CertifyError::FunctionalDimension);
    }
    Ok(())
}

fn weight_scale(inst: &Instance) -> f64 {
    inst.sites().iter().map(|s| s.weight).fold(1.0, f64::max)
}

/// Per-site conditions `γ_i°(−φ_i/w_i) ≤ 1` and `h(φ_i, K_i) + w_i dist_i(x) = ⟨φ_i, x⟩`.
fn site_checks(inst: &Instance, x: &[f64], cert: &Certificate, tol: f64) -> Vec<Check> {
    let mut out = Vec::new();
    for (i, (site, phi)) in inst.sites().iter().zip(&cert.phis).enumerate() {
        let polar = site.gauge.polar(&neg(phi)) / site.weight;
        out.push(check("polar", Some(i), polar - 1.0, tol));
        let px = dot(phi, x);
        let residual = match site.set.support(phi) {
            Support::Finite(h) => (h + site.term(x).value - px).abs(),
            Support::Infinite => f64::INFINITY,
        };
        out.push(check("support", Some(i), residual, tol * (1.0 + px.abs())));
    }
    out
}

fn sum_check(sum: &[f64], tol: f64, scale: f64) -> Check {
    check("sum", None, norm(sum), tol * scale)
}

/// Checks the set-site optimality conditions at `x`.
pub fn certify_sets(
    inst: &Instance,
    x: &[f64],
    cert: &Certificate,
    tol: f64,
) -> Result<CertificateReport, CertifyError> {
    validate(inst, x, cert)?;
    let mut checks = site_checks(inst, x, cert, tol);
    let sum = linalg::sum_vectors(&cert.phis, inst.dim());
    checks.push(sum_check(&sum, tol, weight_scale(inst)));
    Ok(CertificateReport::new(checks))
}

/// Checks the constrained conditions: per-site conditions, `φ₀ ∈ nor(x, K₀)`,
/// and `φ₀ + Σ φ_i = 0`. A missing `φ₀` counts as zero.
pub fn certify_heron(
    inst: &Instance,
    x: &[f64],
    cert: &Certificate,
    tol: f64,
) -> Result<CertificateReport, CertifyError> {
    validate(inst, x, cert)?;
    let k0 = inst.constraint().ok_or(CertifyError::MissingConstraint)?;
    if !k0.contains(x, tol * (1.0 + norm(x))).unwrap_or(false) {
        return Err(CertifyError::NotInConstraint);
    }
    let d = inst.dim();
    let phi0 = cert.phi0.clone().unwrap_or_else(|| vec![0.0; d]);
    let mut checks = site_checks(inst, x, cert, tol);
    let normal_residual = match k0.support(&phi0) {
        Support::Finite(h) => (h - dot(&phi0, x)).max(0.0),
        Support::Infinite => f64::INFINITY,
    };
    let in_cone = k0.normal_cone_contains(x, &phi0, tol).unwrap_or(false);
    checks.push(Check {
        label: "normal cone".into(),
        site: None,
        residual: normal_residual,
        passed: in_cone,
    });
    let sum = linalg::add(&linalg::sum_vectors(&cert.phis, d), &phi0);
    checks.push(sum_check(&sum, tol, weight_scale(inst)));
    Ok(CertificateReport::new(checks))
}

/// Checks the point-site conditions with the functionals read in the norming
/// convention `ψ_i = −φ_i`.
///
/// Away from the sites every `ψ_i` must norm `p_i − x` for `w_i γ_i` and the
/// `ψ_i` must sum to zero. At `x = p_j` the functional of site `j` is not
/// used; instead `γ_j°(−Σ_{i≠j} ψ_i) ≤ w_j` is checked. When several sites
/// coincide with `x`, their own functionals are checked against their polar
/// balls together with the full sum.
pub fn certify_points(
    inst: &Instance,
    x: &[f64],
    cert: &Certificate,
    tol: f64,
) -> Result<CertificateReport, CertifyError> {
    validate(inst, x, cert)?;
    let mut pts = Vec::new();
    for (i, s) in inst.sites().iter().enumerate() {
        match &s.set {
            ConvexSet::Singleton(p) => pts.push(p.clone()),
            _ => return Err(CertifyError::NonSingletonSite(i)),
        }
    }
    let d = inst.dim();
    let psi = cert.norming();
    let at: Vec<usize> = pts
        .iter()
        .enumerate()
        .filter(|(_, p)| linalg::dist(p, x) <= tol * (1.0 + norm(x)))
        .map(|(i, _)| i)
        .collect();
    let mut checks = Vec::new();
    for (i, (site, p)) in inst.sites().iter().zip(&pts).enumerate() {
        if at.contains(&i) {
            continue;
        }
        let w = site.weight;
        let diff = sub(p, x);
        let g = w * site.gauge.eval(&diff);
        checks.push(check(
            "norming polar",
            Some(i),
            (site.gauge.polar(&psi[i]) / w - 1.0).abs(),
            tol,
        ));
        checks.push(check(
            "norming value",
            Some(i),
            (dot(&psi[i], &diff) - g).abs(),
            tol * (1.0 + g),
        ));
    }
    match at.as_slice() {
        [] => {
            checks.push(sum_check(&linalg::sum_vectors(&psi, d), tol, weight_scale(inst)));
        }
        [j] => {
            let others: Vec<Vec<f64>> = psi
                .iter()
                .enumerate()
                .filter(|(i, _)| i != j)
                .map(|(_, v)| v.clone())
                .collect();
            let s = neg(&linalg::sum_vectors(&others, d));
            let site = &inst.sites()[*j];
            checks.push(check(
                "site polar",
                Some(*j),
                site.gauge.polar(&s) / site.weight - 1.0,
                tol,
            ));
        }
        many => {
            for &j in many {
                let site = &inst.sites()[j];
                checks.push(check(
                    "polar",
                    Some(j),
                    site.gauge.polar(&cert.phis[j].iter().map(|v| -v).collect::<Vec<_>>())
                        / site.weight
                        - 1.0,
                    tol,
                ));
            }
            checks.push(sum_check(&cert.sum(d), tol, weight_scale(inst)));
        }
    }
    Ok(CertificateReport::new(checks))
}

type Lin = Vec<(usize, f64)>;

/// Rows of the slack-minimizing certificate search, all of the form
/// `⟨g, z⟩ ≤ h` or second-order cones, with a strictly feasible start.
struct CertProgram {
    n: usize,
    z0: Vec<f64>,
    linear: Vec<(Lin, f64)>,
    cones: Vec<ConeRow>,
    sigma: usize,
}

impl CertProgram {
    fn var(&mut self, init: f64) -> usize {
        self.n += 1;
        self.z0.push(init);
        self.n - 1
    }

    fn lin_eval(&self, row: &Lin) -> f64 {
        row.iter().map(|&(j, v)| v * self.z0[j]).sum()
    }

    /// `⟨φ, ·⟩` applied to a constant vector.
    fn pair(phi: &[Lin], v: &[f64]) -> Lin {
        phi.iter()
            .zip(v)
            .flat_map(|(t, vk)| t.iter().map(move |&(j, c)| (j, c * vk)))
            .collect()
    }

    /// `h(φ, K) + level ≤ ⟨φ, x⟩ + σ`.
    fn support_rows(&mut self, set: &ConvexSet, phi: &[Lin], x: &[f64], level: f64) {
        let s = self.sigma;
        let vertex_row = |this: &mut Self, v: &[f64]| {
            let mut g: Lin = Self::pair(phi, &sub(v, x));
            g.push((s, -1.0));
            this.linear.push((g, -level));
        };
        match set {
            ConvexSet::Singleton(p) => vertex_row(self, p),
            ConvexSet::VPolytope(vs) => {
                for v in vs {
                    vertex_row(self, v);
                }
            }
            ConvexSet::Flat(f) => {
                for u in f.basis() {
                    for sign in [1.0, -1.0] {
                        let mut g: Lin = Self::pair(phi, &linalg::scale(u, sign));
                        g.push((s, -1.0));
                        self.linear.push((g, 0.0));
                    }
                }
                vertex_row(self, f.base());
            }
            ConvexSet::Ball { center, radius } => {
                // r‖φ‖ ≤ ⟨φ, x − c⟩ − level + σ.
                let m_rows = phi
                    .iter()
                    .map(|t| t.iter().map(|&(j, c)| (j, c * radius)).collect())
                    .collect();
                let mut e = Self::pair(phi, &sub(x, center));
                e.push((s, 1.0));
                self.cones.push(ConeRow {
                    m_rows,
                    m0: vec![0.0; phi.len()],
                    e,
                    e0: -level,
                });
            }
        }
    }

    /// Raises the initial slack until every row is strictly satisfied.
    fn initial_sigma(&mut self) {
        self.z0[self.sigma] = 0.0;
        let mut need: f64 = 0.0;
        for (g, h) in &self.linear {
            if g.iter().any(|&(j, _)| j == self.sigma) {
                need = need.max(self.lin_eval(g) - h);
            }
        }
        for c in &self.cones {
            if c.e.iter().any(|&(j, _)| j == self.sigma) {
                let u: f64 = c
                    .m_rows
                    .iter()
                    .zip(&c.m0)
                    .map(|(r, m)| (self.lin_eval(r) + m).powi(2))
                    .sum::<f64>()
                    .sqrt();
                need = need.max(u - self.lin_eval(&c.e) - c.e0);
            }
        }
        self.z0[self.sigma] = need.max(0.0) + 1.0;
    }

    fn solve(&self) -> Option<Vec<f64>> {
        if self.cones.is_empty() {
            let mut lp = Lp::new();
            lp.add_vars(self.n, true);
            lp.set_cost(self.sigma, 1.0);
            for (g, h) in &self.linear {
                lp.add_row(g.clone(), Cmp::Le, *h);
            }
            lp.solve().optimal().map(|s| s.x)
        } else {
            let mut cost = vec![0.0; self.n];
            cost[self.sigma] = 1.0;
            let prog = ConicProgram {
                n: self.n,
                cost,
                linear: self
                    .linear
                    .iter()
                    .map(|(g, h)| LinearRow { g: g.clone(), h: *h })
                    .collect(),
                cones: self.cones.clone(),
            };
            prog.solve(&self.z0, &BarrierOptions::default()).map(|r| r.z)
        }
    }
}

fn eval_phi(phi: &[Lin], z: &[f64]) -> Vec<f64> {
    phi.iter()
        .map(|t| t.iter().map(|&(j, v)| v * z[j]).sum())
        .collect()
}

/// Searches for functionals certifying that `x` is optimal.
///
/// Minimizes a slack `σ` over the per-site subdifferentials (polytope polar
/// balls as hulls of facet functionals, ellipsoid polar balls as cones),
/// support inequalities of the sites, the normal cone of `K₀`, and
/// `|Σφ| ≤ σ`. The candidate is returned only if the matching `certify_*`
/// check accepts it at `tol`.
pub fn find_certificate(inst: &Instance, x: &[f64], tol: f64) -> Result<Certificate, NotFound> {
    let d = inst.dim();
    if x.len() != d {
        return Err(NotFound {
            slack: f64::INFINITY,
            reason: "dimension mismatch".into(),
        });
    }
    let mut p = CertProgram {
        n: 0,
        z0: Vec::new(),
        linear: Vec::new(),
        cones: Vec::new(),
        sigma: 0,
    };
    p.sigma = p.var(1.0);
    let mut phis: Vec<Vec<Lin>> = Vec::new();
    for site in inst.sites() {
        let w = site.weight;
        let phi: Vec<Lin> = match site.gauge.ellipsoid_polar_data() {
            None => {
                // φ = −w Σ μ_j a_j with μ in the simplex.
                let facets = site.gauge.facets();
                let init = 1.0 / (facets.len() as f64 + 1.0);
                let mu: Vec<usize> = facets.iter().map(|_| p.var(init)).collect();
                for &j in &mu {
                    p.linear.push((vec![(j, -1.0)], 0.0));
                }
                p.linear.push((mu.iter().map(|&j| (j, 1.0)).collect(), 1.0));
                (0..d)
                    .map(|k| mu.iter().zip(facets).map(|(&j, a)| (j, -w * a[k])).collect())
                    .collect()
            }
            Some((ainv_t, c)) => {
                // γ°(−φ/w) ≤ 1  ⟺  ‖A⁻ᵀφ‖ ≤ w + ⟨φ, c⟩.
                let vars: Vec<usize> = (0..d).map(|_| p.var(0.0)).collect();
                let phi: Vec<Lin> = vars.iter().map(|&j| vec![(j, 1.0)]).collect();
                p.cones.push(ConeRow {
                    m_rows: ainv_t
                        .iter()
                        .map(|row| vars.iter().zip(row).map(|(&j, &v)| (j, v)).collect())
                        .collect(),
                    m0: vec![0.0; d],
                    e: CertProgram::pair(&phi, &c),
                    e0: w,
                });
                phi
            }
        };
        p.support_rows(&site.set, &phi, x, site.term(x).value);
        phis.push(phi);
    }
    let phi0: Option<Vec<Lin>> = inst.constraint().map(|k0| {
        let vars: Vec<usize> = (0..d).map(|_| p.var(0.0)).collect();
        let phi: Vec<Lin> = vars.iter().map(|&j| vec![(j, 1.0)]).collect();
        p.support_rows(k0, &phi, x, 0.0);
        phi
    });
    for k in 0..d {
        let mut row: Lin = phis.iter().flat_map(|phi| phi[k].clone()).collect();
        if let Some(phi) = &phi0 {
            row.extend(phi[k].iter().copied());
        }
        for sign in [1.0, -1.0] {
            let mut g: Lin = row.iter().map(|&(j, v)| (j, sign * v)).collect();
            g.push((p.sigma, -1.0));
            p.linear.push((g, 0.0));
        }
    }
    p.initial_sigma();
    let z = p.solve().ok_or_else(|| NotFound {
        slack: f64::INFINITY,
        reason: "certificate program failed".into(),
    })?;
    let slack = z[p.sigma];
    let cert = Certificate {
        phis: phis.iter().map(|phi| eval_phi(phi, &z)).collect(),
        phi0: phi0.as_ref().map(|phi| eval_phi(phi, &z)),
    };
    let report = match inst.constraint() {
        Some(_) => certify_heron(inst, x, &cert, tol),
        None => certify_sets(inst, x, &cert, tol),
    };
    match report {
        Ok(r) if r.accepted => Ok(cert),
        Ok(r) => Err(NotFound {
            slack,
            reason: format!(
                "failed checks: {}",
                r.failures()
                    .map(|c| match c.site {
                        Some(i) => format!("{} (site {i})", c.label),
                        None => c.label.clone(),
                    })
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        }),
        Err(e) => Err(NotFound {
            slack,
            reason: e.to_string(),
        }),
    }
}
