//! SVG level curves of planar objectives by marching squares.

use std::fmt::Write as _;

use thiserror::Error;

use crate::ftcore::Instance;
use crate::geometry2d::{Polygon, P2};
use crate::sets::ConvexSet;

pub const DEFAULT_RASTER: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlotError {
    #[error("plots need dimension 2")]
    NotPlanar,
    #[error("view box must have positive extent")]
    BadView,
    #[error("levels must be finite and sorted ascending")]
    BadLevels,
    #[error("raster must have at least 2 cells per axis")]
    BadRaster,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub lo: P2,
    pub hi: P2,
    pub levels: Vec<f64>,
    pub raster: usize,
    pub overlay: Option<Polygon>,
}

impl PlotSpec {
    pub fn new(lo: P2, hi: P2, levels: Vec<f64>) -> Result<Self, PlotError> {
        let spec = PlotSpec {
            lo,
            hi,
            levels,
            raster: DEFAULT_RASTER,
            overlay: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), PlotError> {
        if !(self.hi[0] > self.lo[0] && self.hi[1] > self.lo[1]) || !self.lo.iter().chain(&self.hi).all(|v| v.is_finite()) {
            return Err(PlotError::BadView);
        }
        if !self.levels.iter().all(|l| l.is_finite()) || self.levels.windows(2).any(|w| w[0] > w[1]) {
            return Err(PlotError::BadLevels);
        }
        if self.raster < 2 {
            return Err(PlotError::BadRaster);
        }
        Ok(())
    }
}

type Segment = (P2, P2);

/// Contour segments of `values` (row-major over `(n+1)²` nodes) at `level`.
pub fn marching_squares(values: &[f64], n: usize, lo: P2, hi: P2, level: f64) -> Vec<Segment> {
    let h = [(hi[0] - lo[0]) / n as f64, (hi[1] - lo[1]) / n as f64];
    let node = |i: usize, j: usize| [lo[0] + i as f64 * h[0], lo[1] + j as f64 * h[1]];
    let val = |i: usize, j: usize| values[j * (n + 1) + i];
    let lerp = |a: P2, fa: f64, b: P2, fb: f64| {
        let t = if fb == fa { 0.5 } else { (level - fa) / (fb - fa) };
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    };
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..n {
            // Corners counterclockwise from the lower left.
            let c = [node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)];
            let f = [val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)];
            let mask = (0..4).fold(0, |m, k| m | (((f[k] >= level) as usize) << k));
            if mask == 0 || mask == 15 {
                continue;
            }
            let edge = |k: usize| lerp(c[k], f[k], c[(k + 1) % 4], f[(k + 1) % 4]);
            let crossing: Vec<usize> = (0..4)
                .filter(|&k| ((mask >> k) & 1) != ((mask >> ((k + 1) % 4)) & 1))
                .collect();
            if crossing.len() == 2 {
                out.push((edge(crossing[0]), edge(crossing[1])));
            } else {
                // Saddle: the cell average decides which corners connect.
                let center_high = f.iter().sum::<f64>() / 4.0 >= level;
                let corner0_high = mask & 1 == 1;
                if center_high == corner0_high {
                    out.push((edge(0), edge(1)));
                    out.push((edge(2), edge(3)));
                } else {
                    out.push((edge(3), edge(0)));
                    out.push((edge(1), edge(2)));
                }
            }
        }
    }
    out
}

fn sample(inst: &Instance, spec: &PlotSpec) -> Vec<f64> {
    let n = spec.raster;
    let h = [(spec.hi[0] - spec.lo[0]) / n as f64, (spec.hi[1] - spec.lo[1]) / n as f64];
    let mut values = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            values.push(inst.objective(&[spec.lo[0] + i as f64 * h[0], spec.lo[1] + j as f64 * h[1]]));
        }
    }
    values
}

const CANVAS: f64 = 600.0;

/// SVG document with one path per level, the sites, and an optional overlay.
pub fn render_svg(inst: &Instance, spec: &PlotSpec) -> Result<String, PlotError> {
    if inst.dim() != 2 {
        return Err(PlotError::NotPlanar);
    }
    spec.validate()?;
    let (w, h) = (spec.hi[0] - spec.lo[0], spec.hi[1] - spec.lo[1]);
    let s = CANVAS / w.max(h);
    let (cw, ch) = (w * s, h * s);
    let map = |p: P2| ((p[0] - spec.lo[0]) * s, (spec.hi[1] - p[1]) * s);
    let values = sample(inst, spec);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{cw:.1}" height="{ch:.1}" viewBox="0 0 {cw:.1} {ch:.1}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{cw:.1}" height="{ch:.1}" fill="white"/>"#);
    let count = spec.levels.len().max(1) as f64;
    for (k, &level) in spec.levels.iter().enumerate() {
        let segs = marching_squares(&values, spec.raster, spec.lo, spec.hi, level);
        let shade = (40.0 + 160.0 * k as f64 / count) as u8;
        let mut d = String::new();
        for (a, b) in segs {
            let (ax, ay) = map(a);
            let (bx, by) = map(b);
            let _ = write!(d, "M{ax:.2} {ay:.2}L{bx:.2} {by:.2}");
        }
        let _ = writeln!(
            svg,
            r#"<path class="level" data-level="{level}" d="{d}" fill="none" stroke="rgb({shade},{shade},255)" stroke-width="1"/>"#
        );
    }
    if let Some(poly) = &spec.overlay {
        let pts: Vec<String> = poly
            .vertices()
            .iter()
            .map(|&p| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polygon class="locus" points="{}" fill="rgba(255,0,0,0.3)" stroke="red" stroke-width="2"/>"#,
            pts.join(" ")
        );
    }
    for site in inst.sites() {
        draw_set(&mut svg, &site.set, &map, s, spec);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn draw_set(svg: &mut String, k: &ConvexSet, map: &dyn Fn(P2) -> (f64, f64), s: f64, spec: &PlotSpec) {
    match k {
        ConvexSet::Singleton(p) => {
            let (x, y) = map([p[0], p[1]]);
            let _ = writeln!(svg, r#"<circle class="site" cx="{x:.2}" cy="{y:.2}" r="3" fill="black"/>"#);
        }
        ConvexSet::VPolytope(vs) => {
            let pts: Vec<P2> = vs.iter().map(|v| [v[0], v[1]]).collect();
            let poly = Polygon::from_points(&pts, 0.0);
            let coords: Vec<String> = poly
                .vertices()
                .iter()
                .map(|&p| {
                    let (x, y) = map(p);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(
                svg,
                r#"<polygon class="site" points="{}" fill="black" stroke="black" stroke-width="2"/>"#,
                coords.join(" ")
            );
        }
        ConvexSet::Ball { center, radius } => {
            let (x, y) = map([center[0], center[1]]);
            let _ = writeln!(
                svg,
                r#"<circle class="site" cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="none" stroke="black" stroke-width="2"/>"#,
                radius * s
            );
        }
        ConvexSet::Flat(f) => {
            let b = f.base();
            let reach = (spec.hi[0] - spec.lo[0]).hypot(spec.hi[1] - spec.lo[1]) + (b[0] - spec.lo[0]).hypot(b[1] - spec.lo[1]);
            match f.basis().first() {
                None => {
                    let (x, y) = map([b[0], b[1]]);
                    let _ = writeln!(svg, r#"<circle class="site" cx="{x:.2}" cy="{y:.2}" r="3" fill="black"/>"#);
                }
                Some(u) => {
                    let (x1, y1) = map([b[0] - reach * u[0], b[1] - reach * u[1]]);
                    let (x2, y2) = map([b[0] + reach * u[0], b[1] + reach * u[1]]);
                    let _ = writeln!(
                        svg,
                        r#"<line class="site" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="black" stroke-width="2"/>"#
                    );
                }
            }
        }
    }
}
