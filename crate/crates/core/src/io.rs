//! JSON descriptors for gauges, sets, and instances. Unknown fields are rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ftcore::{Instance, InstanceError, Site};
use crate::gauge::{Ball, Gauge, GaugeError};
use crate::sets::{ConvexSet, SetError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("gauge of site {site:?}: {source}")]
    Gauge { site: Option<usize>, source: GaugeError },
    #[error("set of site {site:?}: {source}")]
    Set { site: Option<usize>, source: SetError },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum GaugeDesc {
    Hpolytope { functionals: Vec<Vec<f64>> },
    Vpolytope { vertices: Vec<Vec<f64>> },
    Ellipsoid { matrix: Vec<Vec<f64>>, center: Vec<f64> },
    Euclidean { dim: usize },
    L1 { dim: usize },
    Linf { dim: usize },
}

impl GaugeDesc {
    pub fn build(&self) -> Result<Gauge, GaugeError> {
        match self.clone() {
            GaugeDesc::Hpolytope { functionals } => Gauge::hpolytope(functionals),
            GaugeDesc::Vpolytope { vertices } => Gauge::vpolytope(vertices),
            GaugeDesc::Ellipsoid { matrix, center } => Gauge::ellipsoid(matrix, center),
            GaugeDesc::Euclidean { dim } => Gauge::euclidean(dim),
            GaugeDesc::L1 { dim } => Gauge::l1(dim),
            GaugeDesc::Linf { dim } => Gauge::linf(dim),
        }
    }
}

impl From<&Gauge> for GaugeDesc {
    fn from(g: &Gauge) -> Self {
        match g.ball().clone() {
            Ball::HPolytope { functionals } => GaugeDesc::Hpolytope { functionals },
            Ball::VPolytope { vertices } => GaugeDesc::Vpolytope { vertices },
            Ball::Ellipsoid { matrix, center } => GaugeDesc::Ellipsoid { matrix, center },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SetDesc {
    Point { p: Vec<f64> },
    Vpolytope { vertices: Vec<Vec<f64>> },
    Segment { a: Vec<f64>, b: Vec<f64> },
    Flat { base: Vec<f64>, directions: Vec<Vec<f64>> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl SetDesc {
    pub fn build(&self) -> Result<ConvexSet, SetError> {
        match self.clone() {
            SetDesc::Point { p } => ConvexSet::point(p),
            SetDesc::Vpolytope { vertices } => ConvexSet::polytope(vertices),
            SetDesc::Segment { a, b } => ConvexSet::segment(a, b),
            SetDesc::Flat { base, directions } => ConvexSet::flat(base, directions),
            SetDesc::Ball { center, radius } => ConvexSet::ball(center, radius),
        }
    }
}

impl From<&ConvexSet> for SetDesc {
    fn from(k: &ConvexSet) -> Self {
        match k {
            ConvexSet::Singleton(p) => SetDesc::Point { p: p.clone() },
            ConvexSet::VPolytope(v) => SetDesc::Vpolytope { vertices: v.clone() },
            ConvexSet::Flat(f) => SetDesc::Flat {
                base: f.base().to_vec(),
                directions: f.directions().to_vec(),
            },
            ConvexSet::Ball { center, radius } => SetDesc::Ball {
                center: center.clone(),
                radius: *radius,
            },
        }
    }
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteDesc {
    pub set: SetDesc,
    pub gauge: GaugeDesc,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDesc {
    pub dimension: usize,
    pub sites: Vec<SiteDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<SetDesc>,
}

impl InstanceDesc {
    pub fn build(&self) -> Result<Instance, IoError> {
        let mut sites = Vec::with_capacity(self.sites.len());
        for (i, s) in self.sites.iter().enumerate() {
            let set = s.set.build().map_err(|source| IoError::Set { site: Some(i), source })?;
            let gauge = s
                .gauge
                .build()
                .map_err(|source| IoError::Gauge { site: Some(i), source })?;
            sites.push(Site::new(set, gauge, s.weight));
        }
        let constraint = self
            .constraint
            .as_ref()
            .map(|k| k.build().map_err(|source| IoError::Set { site: None, source }))
            .transpose()?;
        Ok(Instance::new(self.dimension, sites, constraint)?)
    }
}

impl From<&Instance> for InstanceDesc {
    fn from(inst: &Instance) -> Self {
        InstanceDesc {
            dimension: inst.dim(),
            sites: inst
                .sites()
                .iter()
                .map(|s| SiteDesc {
                    set: (&s.set).into(),
                    gauge: (&s.gauge).into(),
                    weight: s.weight,
                })
                .collect(),
            constraint: inst.constraint().map(Into::into),
        }
    }
}

pub fn parse_instance(json: &str) -> Result<Instance, IoError> {
    serde_json::from_str::<InstanceDesc>(json)?.build()
}

pub fn instance_to_json(inst: &Instance) -> String {
    serde_json::to_string(&InstanceDesc::from(inst)).expect("descriptors serialize")
}

pub fn parse_gauge(json: &str) -> Result<Gauge, IoError> {
    serde_json::from_str::<GaugeDesc>(json)?
        .build()
        .map_err(|source| IoError::Gauge { site: None, source })
}

pub fn gauge_to_json(g: &Gauge) -> String {
    serde_json::to_string(&GaugeDesc::from(g)).expect("descriptors serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIVE_FORM_PAIR: &str = r#"{
        "dimension": 2,
        "sites": [
            {"set": {"type": "point", "p": [-2, 2]},
             "gauge": {"type": "hpolytope", "functionals": [[-0.5, 0], [1, 1], [1, -1], [0.5, 1], [0.5, -1]]},
             "weight": 1},
            {"set": {"type": "point", "p": [-2, -2]},
             "gauge": {"type": "hpolytope", "functionals": [[-0.5, 0], [1, 1], [1, -1], [0.5, 1], [0.5, -1]]}}
        ]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let inst = parse_instance(FIVE_FORM_PAIR).unwrap();
        assert_eq!(inst.sites().len(), 2);
        assert_eq!(inst.objective(&[0.0, 0.0]), 2.0);
        assert_eq!(parse_instance(&instance_to_json(&inst)).unwrap(), inst);

        let heron = r#"{"dimension": 2,
            "sites": [{"set": {"type": "segment", "a": [0, 1], "b": [1, 2]}, "gauge": {"type": "euclidean", "dim": 2}, "weight": 2.5},
                      {"set": {"type": "ball", "center": [3, 1], "radius": 0.5}, "gauge": {"type": "l1", "dim": 2}}],
            "constraint": {"type": "flat", "base": [0, 0], "directions": [[1, 0]]}}"#;
        let inst = parse_instance(heron).unwrap();
        assert!(inst.constraint().is_some());
        assert_eq!(parse_instance(&instance_to_json(&inst)).unwrap(), inst);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_instance("{"), Err(IoError::Json(_))));
        let typo = FIVE_FORM_PAIR.replace("\"weight\": 1", "\"wieght\": 1");
        assert!(matches!(parse_instance(&typo), Err(IoError::Json(_))));
        let extra = r#"{"type": "l1", "dim": 2, "scale": 3}"#;
        assert!(matches!(parse_gauge(extra), Err(IoError::Json(_))));
        let mismatch = FIVE_FORM_PAIR.replace("\"dimension\": 2", "\"dimension\": 3");
        assert!(matches!(parse_instance(&mismatch), Err(IoError::Instance(_))));
        let unbounded = r#"{"type": "hpolytope", "functionals": [[1, 0], [0, 1]]}"#;
        assert!(matches!(parse_gauge(unbounded), Err(IoError::Gauge { .. })));
        let g = parse_gauge(r#"{"type": "linf", "dim": 3}"#).unwrap();
        assert_eq!(parse_gauge(&gauge_to_json(&g)).unwrap(), g);
    }
}
