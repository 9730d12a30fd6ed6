//! Minsum problems `min Σ w_i dist_{γ_i}(x, K_i)`, optionally over a
//! constraint set `K₀`: assembly, solvers, and optimality certificates.

mod certify;
mod solve;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gauge::Gauge;
use crate::linalg::neg;
use crate::sets::{ConvexSet, Projection};

pub use certify::{
    certify_heron, certify_points, certify_sets, find_certificate, Check, CertificateReport,
    CertifyError, NotFound,
};
pub use solve::{solve, solve_with, subgradient, Method, Solution, SolveError, SolveOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("instance has no sites")]
    NoSites,
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("weight of site {0} must be positive and finite")]
    BadWeight(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Site {
    pub set: ConvexSet,
    pub gauge: Gauge,
    pub weight: f64,
}

impl Site {
    pub fn new(set: ConvexSet, gauge: Gauge, weight: f64) -> Self {
        Site { set, gauge, weight }
    }

    /// Unit-weight singleton site.
    pub fn point(p: Vec<f64>, gauge: Gauge) -> Self {
        Site {
            set: ConvexSet::Singleton(p),
            gauge,
            weight: 1.0,
        }
    }

    /// `w · dist_γ(x, K)` with a nearest point.
    pub fn term(&self, x: &[f64]) -> Projection {
        let p = self.set.distance(&self.gauge, x);
        Projection {
            value: self.weight * p.value,
            witness: p.witness,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    dim: usize,
    sites: Vec<Site>,
    constraint: Option<ConvexSet>,
}

impl Instance {
    pub fn new(
        dim: usize,
        sites: Vec<Site>,
        constraint: Option<ConvexSet>,
    ) -> Result<Self, InstanceError> {
        if dim == 0 {
            return Err(InstanceError::ZeroDimension);
        }
        if sites.is_empty() {
            return Err(InstanceError::NoSites);
        }
        let mismatch = |what: String, got: usize| InstanceError::DimensionMismatch {
            what,
            expected: dim,
            got,
        };
        for (i, s) in sites.iter().enumerate() {
            if s.set.dim() != dim {
                return Err(mismatch(format!("site {i} set"), s.set.dim()));
            }
            if s.gauge.dim() != dim {
                return Err(mismatch(format!("site {i} gauge"), s.gauge.dim()));
            }
            if !(s.weight > 0.0 && s.weight.is_finite()) {
                return Err(InstanceError::BadWeight(i));
            }
        }
        if let Some(k) = &constraint {
            if k.dim() != dim {
                return Err(mismatch("constraint".into(), k.dim()));
            }
        }
        Ok(Instance {
            dim,
            sites,
            constraint,
        })
    }

    /// Unit-weight point sites under one gauge.
    pub fn points(gauge: &Gauge, points: &[Vec<f64>]) -> Result<Self, InstanceError> {
        let dim = gauge.dim();
        Self::new(
            dim,
            points
                .iter()
                .map(|p| Site::point(p.clone(), gauge.clone()))
                .collect(),
            None,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn constraint(&self) -> Option<&ConvexSet> {
        self.constraint.as_ref()
    }

    pub fn total_weight(&self) -> f64 {
        self.sites.iter().map(|s| s.weight).sum()
    }

    /// The site points, when every site is a singleton.
    pub fn point_sites(&self) -> Option<Vec<&[f64]>> {
        self.sites
            .iter()
            .map(|s| match &s.set {
                ConvexSet::Singleton(p) => Some(p.as_slice()),
                _ => None,
            })
            .collect()
    }

    pub fn with_constraint(&self, constraint: Option<ConvexSet>) -> Result<Self, InstanceError> {
        Self::new(self.dim, self.sites.clone(), constraint)
    }

    pub fn with_site(&self, site: Site) -> Result<Self, InstanceError> {
        let mut sites = self.sites.clone();
        sites.push(site);
        Self::new(self.dim, sites, self.constraint.clone())
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<(), InstanceError> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(InstanceError::DimensionMismatch {
                what: "point".into(),
                expected: self.dim,
                got: x.len(),
            })
        }
    }

    /// `f(x) = Σ w_i dist_{γ_i}(x, K_i)`; the constraint is ignored.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.sites.iter().map(|s| s.term(x).value).sum()
    }
}

pub fn objective_eval(inst: &Instance, x: &[f64]) -> Result<f64, InstanceError> {
    inst.check_point(x)?;
    Ok(inst.objective(x))
}

/// Dual functionals `φ_i`, one per site, stored with `γ_i°(−φ_i / w_i) ≤ 1`,
/// plus `φ₀ ∈ nor(x, K₀)` for constrained problems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub phis: Vec<Vec<f64>>,
    #[serde(default)]
    pub phi0: Option<Vec<f64>>,
}

impl Certificate {
    pub fn new(phis: Vec<Vec<f64>>) -> Self {
        Certificate { phis, phi0: None }
    }

    pub fn with_phi0(phis: Vec<Vec<f64>>, phi0: Vec<f64>) -> Self {
        Certificate {
            phis,
            phi0: Some(phi0),
        }
    }

    /// Builds a certificate from functionals that norm `p_i − x`.
    pub fn from_norming(norming: Vec<Vec<f64>>) -> Self {
        Certificate::new(norming.iter().map(|p| neg(p)).collect())
    }

    /// The functionals in the norming convention (`φ_i` norms `p_i − x`).
    pub fn norming(&self) -> Vec<Vec<f64>> {
        self.phis.iter().map(|p| neg(p)).collect()
    }

    /// `Σ φ_i + φ₀`.
    pub fn sum(&self, dim: usize) -> Vec<f64> {
        let mut s = crate::linalg::sum_vectors(&self.phis, dim);
        if let Some(p0) = &self.phi0 {
            s = crate::linalg::add(&s, p0);
        }
        s
    }
}
