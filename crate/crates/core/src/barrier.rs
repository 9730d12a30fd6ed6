//! Log-barrier path following for small programs with linear and
//! second-order-cone constraints, all affine in the decision vector.

use nalgebra::{DMatrix, DVector};

use crate::linalg::dot;

/// `⟨g, z⟩ ≤ h`.
#[derive(Clone, Debug)]
pub struct LinearRow {
    pub g: Vec<(usize, f64)>,
    pub h: f64,
}

/// `‖M z + m‖₂ ≤ ⟨e, z⟩ + e0`, with `M` given by sparse rows.
#[derive(Clone, Debug)]
pub struct ConeRow {
    pub m_rows: Vec<Vec<(usize, f64)>>,
    pub m0: Vec<f64>,
    pub e: Vec<(usize, f64)>,
    pub e0: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ConicProgram {
    pub n: usize,
    pub cost: Vec<f64>,
    pub linear: Vec<LinearRow>,
    pub cones: Vec<ConeRow>,
}

#[derive(Clone, Debug)]
pub struct BarrierResult {
    pub z: Vec<f64>,
    pub objective: f64,
    /// Duality-gap bound `ν / s` at termination.
    pub gap: f64,
    pub newton_steps: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct BarrierOptions {
    pub rel_gap: f64,
    pub growth: f64,
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            rel_gap: 1e-11,
            growth: 10.0,
            max_newton: 4000,
        }
    }
}

fn sparse_dot(row: &[(usize, f64)], z: &[f64]) -> f64 {
    row.iter().map(|&(j, v)| v * z[j]).sum()
}

impl ConicProgram {
    fn complexity(&self) -> f64 {
        (self.linear.len() + 2 * self.cones.len()) as f64
    }

    /// Barrier value, or `None` outside the interior.
    fn barrier(&self, z: &[f64]) -> Option<f64> {
        let mut phi = 0.0;
        for r in &self.linear {
            let slack = r.h - sparse_dot(&r.g, z);
            if slack <= 0.0 {
                return None;
            }
            phi -= slack.ln();
        }
        for c in &self.cones {
            let tau = sparse_dot(&c.e, z) + c.e0;
            if tau <= 0.0 {
                return None;
            }
            let uu: f64 = c
                .m_rows
                .iter()
                .zip(&c.m0)
                .map(|(row, m)| {
                    let u = sparse_dot(row, z) + m;
                    u * u
                })
                .sum();
            let q = tau * tau - uu;
            if q <= 0.0 {
                return None;
            }
            phi -= q.ln();
        }
        Some(phi)
    }

    fn grad_hess(&self, z: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        for r in &self.linear {
            let slack = r.h - sparse_dot(&r.g, z);
            for &(i, vi) in &r.g {
                g[i] += vi / slack;
                for &(j, vj) in &r.g {
                    h[(i, j)] += vi * vj / (slack * slack);
                }
            }
        }
        for c in &self.cones {
            let tau = sparse_dot(&c.e, z) + c.e0;
            let u: Vec<f64> = c
                .m_rows
                .iter()
                .zip(&c.m0)
                .map(|(row, m)| sparse_dot(row, z) + m)
                .collect();
            let q = tau * tau - dot(&u, &u);
            // ∇q = 2τe − 2Mᵀu, ∇²q = 2eeᵀ − 2MᵀM.
            let mut dq = DVector::zeros(n);
            for &(i, v) in &c.e {
                dq[i] += 2.0 * tau * v;
            }
            for (row, ui) in c.m_rows.iter().zip(&u) {
                for &(i, v) in row {
                    dq[i] -= 2.0 * ui * v;
                }
            }
            g -= &dq / q;
            h += &dq * dq.transpose() / (q * q);
            for &(i, vi) in &c.e {
                for &(j, vj) in &c.e {
                    h[(i, j)] -= 2.0 * vi * vj / q;
                }
            }
            for row in &c.m_rows {
                for &(i, vi) in row {
                    for &(j, vj) in row {
                        h[(i, j)] += 2.0 * vi * vj / q;
                    }
                }
            }
        }
        (g, h)
    }

    /// Follows the central path from the strictly feasible `z0`.
    pub fn solve(&self, z0: &[f64], opts: &BarrierOptions) -> Option<BarrierResult> {
        self.barrier(z0)?;
        let cost = DVector::from_column_slice(&self.cost);
        let nu = self.complexity().max(1.0);
        let mut z = DVector::from_column_slice(z0);
        let mut s = nu / (1.0 + dot(&self.cost, z0).abs());
        let mut steps = 0;
        loop {
            // Centering by damped Newton with backtracking.
            for _ in 0..200 {
                if steps >= opts.max_newton {
                    break;
                }
                steps += 1;
                let (g, h) = self.grad_hess(z.as_slice());
                let grad = &cost * s + g;
                let dz = regularized_solve(h, &(-&grad));
                let dec = -grad.dot(&dz);
                if !dec.is_finite() || dec / 2.0 <= 1e-12 {
                    break;
                }
                let f0 = s * cost.dot(&z) + self.barrier(z.as_slice()).unwrap();
                let mut step = 1.0;
                let mut moved = false;
                while step > 1e-14 {
                    let trial = &z + &dz * step;
                    if let Some(b) = self.barrier(trial.as_slice()) {
                        if s * cost.dot(&trial) + b <= f0 - 0.25 * step * dec {
                            z = trial;
                            moved = true;
                            break;
                        }
                    }
                    step *= 0.5;
                }
                if !moved || dec / 2.0 <= 1e-9 && step == 1.0 {
                    break;
                }
            }
            let obj = cost.dot(&z);
            if !obj.is_finite() || z.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let gap = nu / s;
            let done = gap <= opts.rel_gap * (1.0 + obj.abs());
            if done || steps >= opts.max_newton {
                return Some(BarrierResult {
                    z: z.iter().copied().collect(),
                    objective: obj,
                    gap,
                    newton_steps: steps,
                    converged: done,
                });
            }
            s *= opts.growth;
        }
    }
}

/// Solves `H x = b` for a positive semidefinite `H`, shifting the diagonal
/// until the Cholesky factorization succeeds.
fn regularized_solve(h: DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = h.nrows();
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut shift = 0.0;
    loop {
        let mut m = h.clone();
        for i in 0..n {
            m[(i, i)] += shift;
        }
        if let Some(ch) = m.cholesky() {
            return ch.solve(b);
        }
        shift = if shift == 0.0 { 1e-14 * scale } else { shift * 10.0 };
        if shift > scale {
            return DVector::zeros(n);
        }
    }
}
