//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Problems are built incrementally: variables are nonnegative unless marked
//! free, rows are sparse `(index, coefficient)` lists with a comparison and a
//! right-hand side, and the objective is always minimized.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    cmp: Cmp,
    rhs: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Lp {
    free: Vec<bool>,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
}

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
    /// The pivot limit was reached without an optimality proof.
    Stalled,
}

enum Phase {
    Optimal,
    Unbounded,
    Stalled,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

/// Reduced-cost threshold relative to the largest reduced cost.
const COST_EPS: f64 = 1e-9;
/// Primal slack of the Harris ratio test relative to the largest right-hand side.
const FEAS_EPS: f64 = 1e-10;
/// Pivot threshold relative to the largest entry of the entering column.
const PIVOT_EPS: f64 = 1e-9;
const DEGENERATE_LIMIT: usize = 50;
const MAX_PIVOTS: usize = 50_000;

impl Lp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.free.len()
    }

    /// Adds a variable (nonnegative, or free) and returns its index.
    pub fn add_var(&mut self, free: bool) -> usize {
        self.free.push(free);
        self.objective.push(0.0);
        self.free.len() - 1
    }

    pub fn add_vars(&mut self, count: usize, free: bool) -> Vec<usize> {
        (0..count).map(|_| self.add_var(free)).collect()
    }

    pub fn set_cost(&mut self, var: usize, c: f64) {
        self.objective[var] = c;
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.free.len()));
        self.rows.push(Row { coeffs, cmp, rhs });
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    /// Constraint rows followed by the objective row; last column is the rhs.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
    /// Structural column for each original variable: (positive part, negative part).
    var_cols: Vec<(usize, Option<usize>)>,
    artificial_start: usize,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &Lp) -> Self {
        let mut var_cols = Vec::with_capacity(lp.free.len());
        let mut ncols = 0;
        for &free in &lp.free {
            if free {
                var_cols.push((ncols, Some(ncols + 1)));
                ncols += 2;
            } else {
                var_cols.push((ncols, None));
                ncols += 1;
            }
        }
        let m = lp.rows.len();
        // Normalize every row to rhs >= 0.
        let mut normalized: Vec<(Vec<f64>, Cmp, f64)> = Vec::with_capacity(m);
        for row in &lp.rows {
            let mut dense = vec![0.0; ncols];
            for &(j, a) in &row.coeffs {
                let (p, n) = var_cols[j];
                dense[p] += a;
                if let Some(n) = n {
                    dense[n] -= a;
                }
            }
            let (mut cmp, mut rhs) = (row.cmp, row.rhs);
            if rhs < 0.0 {
                dense.iter_mut().for_each(|v| *v = -*v);
                rhs = -rhs;
                cmp = match cmp {
                    Cmp::Le => Cmp::Ge,
                    Cmp::Ge => Cmp::Le,
                    Cmp::Eq => Cmp::Eq,
                };
            }
            normalized.push((dense, cmp, rhs));
        }
        let n_slack = normalized.iter().filter(|r| r.1 != Cmp::Eq).count();
        let n_art = normalized.iter().filter(|r| r.1 != Cmp::Le).count();
        let slack_start = ncols;
        let artificial_start = slack_start + n_slack;
        let total = artificial_start + n_art;

        let mut t = vec![vec![0.0; total + 1]; m + 1];
        let mut basis = vec![0; m];
        let (mut s, mut a) = (slack_start, artificial_start);
        for (i, (dense, cmp, rhs)) in normalized.into_iter().enumerate() {
            t[i][..ncols].copy_from_slice(&dense);
            t[i][total] = rhs;
            match cmp {
                Cmp::Le => {
                    t[i][s] = 1.0;
                    basis[i] = s;
                    s += 1;
                }
                Cmp::Ge => {
                    t[i][s] = -1.0;
                    s += 1;
                    t[i][a] = 1.0;
                    basis[i] = a;
                    a += 1;
                }
                Cmp::Eq => {
                    t[i][a] = 1.0;
                    basis[i] = a;
                    a += 1;
                }
            }
        }
        Tableau {
            t,
            basis,
            ncols: total,
            var_cols,
            artificial_start,
            pivots: 0,
        }
    }

    fn m(&self) -> usize {
        self.basis.len()
    }

    fn set_objective(&mut self, costs: &[f64]) {
        let m = self.m();
        let w = self.ncols + 1;
        let mut obj = vec![0.0; w];
        obj[..self.ncols].copy_from_slice(costs);
        for i in 0..m {
            let cb = costs[self.basis[i]];
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(&self.t[i]) {
                    *o -= cb * v;
                }
            }
        }
        self.t[m] = obj;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.ncols + 1;
        let p = self.t[r][c];
        for j in 0..w {
            self.t[r][j] /= p;
        }
        let pivot_row = self.t[r].clone();
        for i in 0..self.t.len() {
            if i == r {
                continue;
            }
            let f = self.t[i][c];
            if f != 0.0 {
                for (v, pv) in self.t[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.t[i][c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs simplex iterations on the current objective row over columns `< limit`:
    /// Bland's entering rule and a Harris two-pass ratio test that prefers
    /// large pivots; long degenerate runs switch to Bland's leaving rule.
    fn iterate(&mut self, limit: usize) -> Phase {
        let m = self.m();
        let rhs = self.ncols;
        let mut degenerate_run = 0;
        while self.pivots < MAX_PIVOTS {
            let scale = 1.0 + self.t[m][..limit].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let entering = (0..limit).find(|&j| self.t[m][j] < -COST_EPS * scale);
            let Some(c) = entering else { return Phase::Optimal };
            let colmax = (0..m).fold(0.0f64, |a, i| a.max(self.t[i][c]));
            let eligible = |a: f64| a > PIVOT_EPS * colmax.max(1.0);
            let bmax = (0..m).fold(0.0f64, |a, i| a.max(self.t[i][rhs].abs()));
            let slack = FEAS_EPS * (1.0 + bmax);
            let bound = (0..m)
                .filter(|&i| eligible(self.t[i][c]))
                .map(|i| (self.t[i][rhs].max(0.0) + slack) / self.t[i][c])
                .fold(f64::INFINITY, f64::min);
            if bound == f64::INFINITY {
                return Phase::Unbounded;
            }
            let rows = (0..m).filter(|&i| eligible(self.t[i][c]) && self.t[i][rhs].max(0.0) / self.t[i][c] <= bound);
            let r = if degenerate_run < DEGENERATE_LIMIT {
                rows.max_by(|&i, &k| {
                    self.t[i][c]
                        .total_cmp(&self.t[k][c])
                        .then(self.basis[k].cmp(&self.basis[i]))
                })
            } else {
                rows.min_by_key(|&i| self.basis[i])
            }
            .expect("the minimizing row is eligible");
            if self.t[r][rhs].max(0.0) <= slack {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
        }
        Phase::Stalled
    }

    fn run(mut self, lp: &Lp) -> LpOutcome {
        let m = self.m();
        let rhs_col = self.ncols;
        if self.artificial_start < self.ncols {
            let mut phase1 = vec![0.0; self.ncols];
            phase1[self.artificial_start..].iter_mut().for_each(|c| *c = 1.0);
            self.set_objective(&phase1);
            // The phase-one objective is bounded below; a reported ray is rounding noise.
            if let Phase::Stalled = self.iterate(self.ncols) {
                return LpOutcome::Stalled;
            }
            let infeasibility = -self.t[m][rhs_col];
            let bscale = 1.0 + (0..m).fold(0.0f64, |a, i| a.max(self.t[i][rhs_col].abs()));
            if infeasibility > 1e-9 * bscale {
                return LpOutcome::Infeasible;
            }
            // Drive remaining artificial variables out of the basis; drop redundant rows.
            let mut i = 0;
            while i < self.m() {
                if self.basis[i] >= self.artificial_start {
                    let row = &self.t[i];
                    let col = (0..self.artificial_start)
                        .max_by(|&j, &k| row[j].abs().total_cmp(&row[k].abs()))
                        .filter(|&j| row[j].abs() > 1e-9);
                    match col {
                        Some(j) => self.pivot(i, j),
                        None => {
                            self.t.remove(i);
                            self.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }
        let mut costs = vec![0.0; self.ncols];
        for (j, &(p, n)) in self.var_cols.iter().enumerate() {
            costs[p] = lp.objective[j];
            if let Some(n) = n {
                costs[n] = -lp.objective[j];
            }
        }
        let m = self.m();
        self.t.truncate(m);
        self.t.push(Vec::new());
        self.set_objective(&costs);
        match self.iterate(self.artificial_start) {
            Phase::Optimal => {}
            Phase::Unbounded => return LpOutcome::Unbounded,
            Phase::Stalled => return LpOutcome::Stalled,
        }
        let mut col_values = vec![0.0; self.ncols];
        for i in 0..m {
            col_values[self.basis[i]] = self.t[i][rhs_col];
        }
        let x: Vec<f64> = self
            .var_cols
            .iter()
            .map(|&(p, n)| col_values[p] - n.map_or(0.0, |n| col_values[n]))
            .collect();
        let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpOutcome::Optimal(LpSolution {
            x,
            value,
            pivots: self.pivots,
        })
    }
}
