//! Small dense vector helpers and a few solves that go through nalgebra.

use nalgebra::{DMatrix, DVector};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn neg(a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| -x).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn zeros(d: usize) -> Vec<f64> {
    vec![0.0; d]
}

pub fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

pub fn sum_vectors(vs: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut s = vec![0.0; d];
    for v in vs {
        for (si, vi) in s.iter_mut().zip(v) {
            *si += vi;
        }
    }
    s
}

pub fn centroid(vs: &[Vec<f64>]) -> Vec<f64> {
    let d = vs[0].len();
    let s = sum_vectors(vs, d);
    scale(&s, 1.0 / vs.len() as f64)
}

pub fn mat_vec(rows: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| dot(r, x)).collect()
}

/// Solves the square system `a x = b`; `None` when numerically singular.
pub fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let lu = m.lu();
    let x = lu.solve(&DVector::from_column_slice(b))?;
    if x.iter().all(|v| v.is_finite()) {
        Some(x.iter().copied().collect())
    } else {
        None
    }
}

/// Orthonormal basis of the span of `dirs` by modified Gram-Schmidt.
/// Returns `None` if the vectors are linearly dependent at relative tolerance `tol`.
pub fn orthonormalize(dirs: &[Vec<f64>], tol: f64) -> Option<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dirs.len());
    for v in dirs {
        let scale0 = norm(v);
        if scale0 == 0.0 {
            return None;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w = axpy(&w, -c, b);
            }
        }
        let n = norm(&w);
        if n <= tol * scale0 {
            return None;
        }
        basis.push(scale(&w, 1.0 / n));
    }
    Some(basis)
}

/// Component of `v` in the span of the orthonormal `basis`.
pub fn project_onto_span(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut p = vec![0.0; v.len()];
    for b in basis {
        let c = dot(v, b);
        p = axpy(&p, c, b);
    }
    p
}

/// Largest singular value of a square matrix given by rows.
pub fn spectral_norm(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    m.singular_values().max()
}
