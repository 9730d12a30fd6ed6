use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use minsum::euclid::{self, EuclidInstance, FlatCase};
use minsum::ftcore::{
    certify_heron, certify_sets, find_certificate, solve_with, Certificate, Instance, Method, SolveError,
    SolveOptions,
};
use minsum::geometry2d::{self, Polygon};
use minsum::io::{self, IoError};
use minsum::oracle::{default_box, grid_minimize, GridSpec};
use minsum::plot::{render_svg, PlotSpec};
use minsum::{ConvexSet, Gauge};

#[derive(Parser)]
#[command(name = "minsum", version, about = "Solve and certify minsum location problems under gauge distances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Lp,
    Barrier,
    Subgradient,
}

#[derive(Clone, Copy, ValueEnum)]
enum EuclidTest {
    Optimal,
    Floating,
    PointAbsorbed,
    FlatAbsorbed,
    FlatPoint,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the objective and print the point, value, and certificate.
    Solve {
        file: PathBuf,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
    /// Check a certificate at a point, or search for one when none is given.
    Certify {
        file: PathBuf,
        #[arg(long, num_args = 1.., allow_negative_numbers = true, required = true)]
        point: Vec<f64>,
        /// JSON file {"phis": [...], "phi0": [...]} in the stored convention.
        #[arg(long)]
        cert: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// The d-segment between two points for a gauge file or the first site's gauge.
    Dseg {
        file: PathBuf,
        #[arg(long, num_args = 2, allow_negative_numbers = true, required = true)]
        x: Vec<f64>,
        #[arg(long, num_args = 2, allow_negative_numbers = true, required = true)]
        y: Vec<f64>,
    },
    /// The solution locus of a planar point-site instance.
    Locus { file: PathBuf },
    /// The sublevel set at level alpha of a planar polytopal point-site instance.
    Sublevel {
        file: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
    },
    /// Euclidean optimality criteria at a point.
    Euclid {
        file: PathBuf,
        #[arg(long, value_enum)]
        test: EuclidTest,
        #[arg(long, num_args = 1.., allow_negative_numbers = true, required = true)]
        point: Vec<f64>,
        #[arg(long, default_value_t = euclid::DYKSTRA_TOL)]
        tol: f64,
    },
    /// Multiplicity of minimizers for one affine flat plus points (Euclidean).
    Classify {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Grid-search minimization.
    Oracle {
        file: PathBuf,
        /// Low corner followed by high corner.
        #[arg(long = "box", num_args = 2.., allow_negative_numbers = true)]
        bbox: Option<Vec<f64>>,
        #[arg(long, default_value_t = 40)]
        res: usize,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// SVG level curves of a planar objective.
    Plot {
        file: PathBuf,
        #[arg(long, num_args = 1.., allow_negative_numbers = true, required = true)]
        levels: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Levels are offsets above the optimal value.
        #[arg(long)]
        relative: bool,
        /// Low corner followed by high corner of the view.
        #[arg(long = "box", num_args = 4, allow_negative_numbers = true)]
        bbox: Option<Vec<f64>>,
        #[arg(long, default_value_t = minsum::plot::DEFAULT_RASTER)]
        raster: usize,
        /// Overlay the solution locus.
        #[arg(long)]
        locus: bool,
    },
    /// Asymmetry ratio and norm diagnostics of a gauge.
    Asymmetry {
        file: PathBuf,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{message}")]
    Verification { message: String, report: Value },
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

/// Rounds every number to 12 significant digits.
fn round_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => {
                let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
                json!(r)
            }
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round_numbers).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_numbers(v))).collect()),
        other => other,
    }
}

fn render(v: &Value) -> String {
    serde_json::to_string_pretty(&round_numbers(v.clone())).expect("values serialize")
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("outputs serialize")
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    io::parse_instance(&read(path)?).map_err(input)
}

/// A gauge file, or the first site's gauge of an instance file.
fn load_gauge(path: &Path) -> Result<Gauge, CliError> {
    let text = read(path)?;
    match io::parse_gauge(&text) {
        Ok(g) => Ok(g),
        Err(IoError::Json(_)) => io::parse_instance(&text)
            .map(|inst| inst.sites()[0].gauge.clone())
            .map_err(input),
        Err(e) => Err(input(e)),
    }
}

fn check_dim(point: &[f64], d: usize) -> Result<(), CliError> {
    if point.len() == d {
        Ok(())
    } else {
        Err(CliError::Input(format!("point has {} coordinates, instance dimension is {d}", point.len())))
    }
}

fn cmd_solve(file: &Path, method: Option<MethodArg>) -> Result<Value, CliError> {
    let inst = load_instance(file)?;
    let opts = SolveOptions {
        method: method.map(|m| match m {
            MethodArg::Lp => Method::Lp,
            MethodArg::Barrier => Method::Barrier,
            MethodArg::Subgradient => Method::Subgradient,
        }),
        ..SolveOptions::default()
    };
    match solve_with(&inst, &opts) {
        Ok(sol) => Ok(to_value(&sol)),
        Err(SolveError::Instance(e)) => Err(input(e)),
        Err(SolveError::Unsupported(m)) => Err(CliError::Input(format!("method {m:?} does not apply to this instance"))),
        Err(e) => Err(CliError::Verification {
            message: e.to_string(),
            report: json!({"error": e.to_string()}),
        }),
    }
}

fn cmd_certify(file: &Path, point: &[f64], cert: Option<&Path>, tol: f64) -> Result<Value, CliError> {
    let inst = load_instance(file)?;
    check_dim(point, inst.dim())?;
    let cert = match cert {
        Some(path) => serde_json::from_str::<Certificate>(&read(path)?).map_err(input)?,
        None => find_certificate(&inst, point, tol).map_err(|e| CliError::Verification {
            message: e.to_string(),
            report: json!({"accepted": false, "reason": "no certificate within tolerance", "slack": e.slack}),
        })?,
    };
    let report = if inst.constraint().is_some() {
        certify_heron(&inst, point, &cert, tol)
    } else {
        certify_sets(&inst, point, &cert, tol)
    }
    .map_err(input)?;
    let out = json!({"accepted": report.accepted, "certificate": cert, "checks": report.checks});
    if report.accepted {
        Ok(out)
    } else {
        Err(CliError::Verification {
            message: "certificate rejected".into(),
            report: out,
        })
    }
}

fn polygon_output(p: &Polygon) -> Value {
    let mut v = to_value(p);
    v["kind"] = to_value(&p.kind());
    v
}

fn cmd_dseg(file: &Path, x: &[f64], y: &[f64]) -> Result<Value, CliError> {
    let g = load_gauge(file)?;
    if g.dim() != 2 {
        return Err(CliError::Input("d-segments are computed in the plane only".into()));
    }
    let poly = if g.is_polytope() {
        geometry2d::dseg_polygon(&g, x, y).map_err(input)?
    } else {
        // Ellipsoid balls are strictly convex: d-segments are straight.
        Polygon::from_points(&[[x[0], x[1]], [y[0], y[1]]], 1e-12)
    };
    Ok(polygon_output(&poly))
}

fn cmd_locus(file: &Path) -> Result<Value, CliError> {
    let inst = load_instance(file)?;
    if inst.dim() != 2 {
        return Err(CliError::Input("loci are computed in the plane only".into()));
    }
    let sol = solve_with(&inst, &SolveOptions::default()).map_err(input)?;
    let cert = sol
        .certificate
        .clone()
        .ok_or_else(|| CliError::Verification {
            message: "solver point was not certified".into(),
            report: to_value(&sol),
        })?;
    let locus = geometry2d::ft_locus_polygon(&inst, &sol.point, &cert, 1e-6).map_err(input)?;
    Ok(json!({
        "point": sol.point,
        "value": sol.value,
        "method": locus.method,
        "polygon": polygon_output(&locus.polygon),
    }))
}

fn cmd_sublevel(file: &Path, alpha: f64) -> Result<Value, CliError> {
    let inst = load_instance(file)?;
    let poly = geometry2d::sublevel_polygon(&inst, alpha).map_err(input)?;
    Ok(polygon_output(&poly))
}

fn verdict(optimal: bool, report: Value) -> Result<Value, CliError> {
    if optimal {
        Ok(report)
    } else {
        Err(CliError::Verification {
            message: "point is not optimal".into(),
            report,
        })
    }
}

fn cmd_euclid(file: &Path, test: EuclidTest, point: &[f64], tol: f64) -> Result<Value, CliError> {
    let inst = EuclidInstance::from_instance(&load_instance(file)?).map_err(input)?;
    check_dim(point, inst.dim())?;
    match test {
        EuclidTest::Optimal => {
            let r = euclid::euclid_optimal_report(&inst, point, tol).map_err(input)?;
            verdict(r.optimal, json!({"optimal": r.optimal, "v": r.u, "residual": r.residual}))
        }
        EuclidTest::FlatPoint => {
            let r = euclid::flat_point_absorbed_test(&inst, point).map_err(input)?;
            verdict(r.optimal, to_value(&r))
        }
        case => {
            let case = match case {
                EuclidTest::Floating => FlatCase::Floating,
                EuclidTest::PointAbsorbed => FlatCase::PointAbsorbed,
                _ => FlatCase::FlatAbsorbed,
            };
            let r = euclid::flat_case_test(&inst, point, case).map_err(input)?;
            verdict(
                r.optimal,
                json!({"optimal": r.optimal, "v": r.v, "norm": r.norm, "orthogonality": r.orthogonality}),
            )
        }
    }
}

fn cmd_classify(file: &Path, tol: f64) -> Result<Value, CliError> {
    let inst = EuclidInstance::from_instance(&load_instance(file)?).map_err(input)?;
    let mut flat = None;
    let mut points = Vec::new();
    for (k, _) in inst.sites() {
        match k {
            ConvexSet::Flat(f) if flat.is_none() => flat = Some(f.clone()),
            ConvexSet::Singleton(p) => points.push(p.clone()),
            _ => {
                return Err(CliError::Input(
                    "classify needs exactly one affine flat and point sites".into(),
                ))
            }
        }
    }
    let flat = flat.ok_or_else(|| CliError::Input("no affine flat among the sites".into()))?;
    if inst.sites().iter().any(|(_, w)| *w != 1.0) {
        return Err(CliError::Input("classify needs unit weights".into()));
    }
    let m = euclid::multiplicity_classify(&flat, &points, tol).map_err(input)?;
    Ok(to_value(&m))
}

fn split_box(v: &[f64], d: usize) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    if v.len() != 2 * d {
        return Err(CliError::Input(format!("--box needs {} numbers", 2 * d)));
    }
    Ok((v[..d].to_vec(), v[d..].to_vec()))
}

fn cmd_oracle(file: &Path, bbox: Option<&[f64]>, res: usize, levels: usize) -> Result<Value, CliError> {
    let inst = load_instance(file)?;
    let (lo, hi) = match bbox {
        Some(v) => split_box(v, inst.dim())?,
        None => default_box(&inst),
    };
    let spec = GridSpec::new(lo, hi, res, levels).map_err(input)?;
    let out = grid_minimize(&inst, &spec).map_err(input)?;
    Ok(json!({
        "value": out.value,
        "point": out.point,
        "cells": out.cells,
        "cell_size": out.cell_size,
        "multiple_minimizers": out.multiple_minimizers(),
    }))
}

struct PlotArgs<'a> {
    levels: &'a [f64],
    out: Option<&'a Path>,
    relative: bool,
    bbox: Option<&'a [f64]>,
    raster: usize,
    locus: bool,
}

fn cmd_plot(file: &Path, a: PlotArgs) -> Result<Option<String>, CliError> {
    let inst = load_instance(file)?;
    if inst.dim() != 2 {
        return Err(CliError::Input("plots need dimension 2".into()));
    }
    let needs_solution = a.relative || a.locus;
    let sol = if needs_solution {
        Some(solve_with(&inst, &SolveOptions::default()).map_err(input)?)
    } else {
        None
    };
    let shift = match (&sol, a.relative) {
        (Some(s), true) => s.value,
        _ => 0.0,
    };
    let mut levels: Vec<f64> = a.levels.iter().map(|l| l + shift).collect();
    levels.sort_by(f64::total_cmp);
    let (lo, hi) = match a.bbox {
        Some(v) => split_box(v, 2)?,
        None => default_box(&inst),
    };
    let mut spec = PlotSpec::new([lo[0], lo[1]], [hi[0], hi[1]], levels).map_err(input)?;
    spec.raster = a.raster;
    if a.locus {
        let sol = sol.expect("solved above");
        if let Some(cert) = &sol.certificate {
            spec.overlay = geometry2d::ft_locus_polygon(&inst, &sol.point, cert, 1e-6)
                .ok()
                .map(|l| l.polygon);
        }
    }
    let svg = render_svg(&inst, &spec).map_err(input)?;
    match a.out {
        Some(path) => {
            fs::write(path, svg).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            Ok(None)
        }
        None => Ok(Some(svg)),
    }
}

fn cmd_asymmetry(file: &Path, trials: usize, seed: u64) -> Result<Value, CliError> {
    let g = load_gauge(file)?;
    let (x0, ratio) = g.asymmetry_witness();
    let mut out = json!({"x0": x0, "ratio": ratio, "symmetric": g.is_symmetric()});
    if g.dim() == 2 {
        let report = geometry2d::norm_characterization_report(&g, trials, seed).map_err(input)?;
        out["report"] = to_value(&report);
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<Option<String>, CliError> {
    let value = match cli.command {
        Command::Solve { file, method } => cmd_solve(&file, method)?,
        Command::Certify { file, point, cert, tol } => cmd_certify(&file, &point, cert.as_deref(), tol)?,
        Command::Dseg { file, x, y } => cmd_dseg(&file, &x, &y)?,
        Command::Locus { file } => cmd_locus(&file)?,
        Command::Sublevel { file, alpha } => cmd_sublevel(&file, alpha)?,
        Command::Euclid { file, test, point, tol } => cmd_euclid(&file, test, &point, tol)?,
        Command::Classify { file, tol } => cmd_classify(&file, tol)?,
        Command::Oracle { file, bbox, res, levels } => cmd_oracle(&file, bbox.as_deref(), res, levels)?,
        Command::Plot {
            file,
            levels,
            out,
            relative,
            bbox,
            raster,
            locus,
        } => {
            return cmd_plot(
                &file,
                PlotArgs {
                    levels: &levels,
                    out: out.as_deref(),
                    relative,
                    bbox: bbox.as_deref(),
                    raster,
                    locus,
                },
            )
        }
        Command::Asymmetry { file, trials, seed } => cmd_asymmetry(&file, trials, seed)?,
    };
    Ok(Some(render(&value)))
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Some(text)) => {
            emit(&text);
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Verification { message, report }) => {
            emit(&render(&report));
            eprintln!("verification failed: {message}");
            ExitCode::from(2)
        }
    }
}
