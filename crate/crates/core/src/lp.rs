//! Dense bounded-variable revised simplex.
//!
//! Small linear programs `min c^T x  s.t.  rows, l <= x <= u` with possibly
//! infinite bounds. Inequality rows receive a slack column, every row an
//! artificial column for phase one. The basis inverse is kept explicitly
//! and rebuilt from scratch every [`REFACTOR_EVERY`] pivots.
//!
//! Pricing is Dantzig's rule until `5 * (rows + cols)` iterations have been
//! spent in a phase, after which Bland's rule takes over so degenerate
//! problems cannot cycle.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpError {
    Infeasible,
    Unbounded,
    /// The anti-cycling guard fired or the basis became singular.
    Stalled {
        iterations: usize,
    },
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::Infeasible => f.write_str("linear program is infeasible"),
            LpError::Unbounded => f.write_str("linear program is unbounded"),
            LpError::Stalled { iterations } => {
                write!(f, "simplex stalled after {iterations} iterations")
            }
        }
    }
}

impl core::error::Error for LpError {}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<f64>,
    sense: Sense,
    rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LinearProgram {
    /// `num_vars` variables with zero cost and bounds `[0, +inf)`.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            cost: vec![0.0; num_vars],
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_cost(&mut self, j: usize, c: f64) {
        self.cost[j] = c;
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    /// Adds `sum coeff_k x_k  (sense)  rhs` from sparse `(index, coeff)` pairs.
    pub fn add_row(&mut self, entries: &[(usize, f64)], sense: Sense, rhs: f64) {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(j, v) in entries {
            coeffs[j] += v;
        }
        self.rows.push(Row { coeffs, sense, rhs });
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        for j in 0..self.num_vars() {
            if self.lower[j] > self.upper[j] + PRIMAL_TOL {
                return Err(LpError::Infeasible);
            }
        }
        let mut s = Simplex::build(self);
        s.solve()?;
        let n = self.num_vars();
        let x: Vec<f64> = s.x[..n].to_vec();
        let objective = self.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution {
            x,
            objective,
            iterations: s.iterations,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at zero.
    Free,
}

struct Simplex {
    m: usize,
    /// Column-major constraint matrix over structural, slack and artificial columns.
    cols: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    status: Vec<Status>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    first_artificial: usize,
    iterations: usize,
    pivots_since_refactor: usize,
}

impl Simplex {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.rows.len();
        let mut cols: Vec<Vec<f64>> = (0..n)
            .map(|j| lp.rows.iter().map(|r| r.coeffs[j]).collect())
            .collect();
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        let mut cost = lp.cost.clone();
        for (i, r) in lp.rows.iter().enumerate() {
            let sign = match r.sense {
                Sense::Le => 1.0,
                Sense::Ge => -1.0,
                Sense::Eq => continue,
            };
            let mut col = vec![0.0; m];
            col[i] = sign;
            cols.push(col);
            lower.push(0.0);
            upper.push(f64::INFINITY);
            cost.push(0.0);
        }
        let first_artificial = cols.len();

        let mut x = vec![0.0; first_artificial];
        let mut status = vec![Status::AtLower; first_artificial];
        for j in 0..first_artificial {
            if lower[j].is_finite() {
                x[j] = lower[j];
                status[j] = Status::AtLower;
            } else if upper[j].is_finite() {
                x[j] = upper[j];
                status[j] = Status::AtUpper;
            } else {
                status[j] = Status::Free;
            }
        }
        let rhs: Vec<f64> = lp.rows.iter().map(|r| r.rhs).collect();
        let mut residual = rhs.clone();
        for (j, col) in cols.iter().enumerate() {
            if x[j] != 0.0 {
                for i in 0..m {
                    residual[i] -= col[i] * x[j];
                }
            }
        }
        let mut binv = vec![0.0; m * m];
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            let sign = if residual[i] < 0.0 { -1.0 } else { 1.0 };
            let mut col = vec![0.0; m];
            col[i] = sign;
            basis.push(cols.len());
            cols.push(col);
            binv[i * m + i] = sign;
            x.push(residual[i].abs());
            status.push(Status::Basic);
            lower.push(0.0);
            upper.push(f64::INFINITY);
            cost.push(0.0);
        }
        Simplex {
            m,
            cols,
            rhs,
            cost,
            lower,
            upper,
            x,
            status,
            basis,
            binv,
            first_artificial,
            iterations: 0,
            pivots_since_refactor: 0,
        }
    }

    fn solve(&mut self) -> Result<(), LpError> {
        let total = self.cols.len();
        let phase_one: Vec<f64> = (0..total)
            .map(|j| if j >= self.first_artificial { 1.0 } else { 0.0 })
            .collect();
        self.run(&phase_one)?;
        let infeasibility: f64 = self.x[self.first_artificial..].iter().sum();
        let scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeasibility > PRIMAL_TOL * scale * 10.0 {
            return Err(LpError::Infeasible);
        }
        for j in self.first_artificial..total {
            self.upper[j] = 0.0;
            if self.status[j] != Status::Basic {
                self.x[j] = 0.0;
            }
        }
        let phase_two = self.cost.clone();
        self.run(&phase_two)?;
        self.refactor()?;
        Ok(())
    }

    fn run(&mut self, cost: &[f64]) -> Result<(), LpError> {
        let m = self.m;
        let total = self.cols.len();
        let bland_after = 5 * (m + total);
        let cap = 50 * (m + total) + 1000;
        let mut local = 0usize;
        let mut y = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        loop {
            local += 1;
            self.iterations += 1;
            if local > cap {
                return Err(LpError::Stalled {
                    iterations: self.iterations,
                });
            }
            if self.pivots_since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            for (k, yk) in y.iter_mut().enumerate() {
                *yk = (0..m)
                    .map(|i| cost[self.basis[i]] * self.binv[i * m + k])
                    .sum();
            }
            let bland = local > bland_after;
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.first_artificial {
                let st = self.status[j];
                if st == Status::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = cost[j] - dot(&y, &self.cols[j]);
                let dir = match st {
                    Status::AtLower if d < -DUAL_TOL => 1.0,
                    Status::AtUpper if d > DUAL_TOL => -1.0,
                    Status::Free if d.abs() > DUAL_TOL => -d.signum(),
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                if d.abs() > best {
                    best = d.abs();
                    entering = Some((j, dir));
                }
            }
            let Some((j, dir)) = entering else {
                // Confirm optimality against a fresh inverse; accumulated
                // product-form updates can hide an improving column.
                if self.pivots_since_refactor > 0 {
                    self.refactor()?;
                    continue;
                }
                return Ok(());
            };

            for (i, a) in alpha.iter_mut().enumerate() {
                *a = dot(&self.binv[i * m..(i + 1) * m], &self.cols[j]);
            }
            // Harris ratio test: find the largest step that keeps every basic
            // variable within PRIMAL_TOL of its bounds, then among the rows
            // blocking before it take the largest pivot.
            let pivot_tol = PIVOT_TOL * alpha.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            let ratio_of = |i: usize, s: &Self, slack: f64| -> Option<(f64, bool)> {
                let rate = -dir * alpha[i];
                let b = s.basis[i];
                if rate < -pivot_tol && s.lower[b].is_finite() {
                    Some(((s.x[b] - s.lower[b] + slack) / -rate, false))
                } else if rate > pivot_tol && s.upper[b].is_finite() {
                    Some(((s.upper[b] - s.x[b] + slack) / rate, true))
                } else {
                    None
                }
            };
            let mut relaxed = f64::INFINITY;
            for i in 0..m {
                if let Some((r, _)) = ratio_of(i, self, PRIMAL_TOL) {
                    relaxed = relaxed.min(r);
                }
            }
            let flip = self.upper[j] - self.lower[j];
            let mut theta = flip;
            let mut leave: Option<(usize, bool)> = None;
            if flip > relaxed {
                let mut leave_piv = 0.0;
                for i in 0..m {
                    let Some((r, to_upper)) = ratio_of(i, self, 0.0) else {
                        continue;
                    };
                    if r > relaxed {
                        continue;
                    }
                    let better = match leave {
                        None => true,
                        Some((k, _)) if bland => self.basis[i] < self.basis[k],
                        Some(_) => alpha[i].abs() > leave_piv,
                    };
                    if better {
                        theta = r.max(0.0);
                        leave = Some((i, to_upper));
                        leave_piv = alpha[i].abs();
                    }
                }
            }
            if !theta.is_finite() {
                return Err(LpError::Unbounded);
            }

            self.x[j] += dir * theta;
            for i in 0..m {
                let b = self.basis[i];
                self.x[b] -= dir * theta * alpha[i];
            }
            match leave {
                None => {
                    if dir > 0.0 {
                        self.x[j] = self.upper[j];
                        self.status[j] = Status::AtUpper;
                    } else {
                        self.x[j] = self.lower[j];
                        self.status[j] = Status::AtLower;
                    }
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    if to_upper {
                        self.x[out] = self.upper[out];
                        self.status[out] = Status::AtUpper;
                    } else {
                        self.x[out] = self.lower[out];
                        self.status[out] = Status::AtLower;
                    }
                    self.basis[r] = j;
                    self.status[j] = Status::Basic;
                    self.pivot(r, &alpha);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let p = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= p;
        }
        for i in 0..m {
            if i == r || alpha[i] == 0.0 {
                continue;
            }
            let f = alpha[i];
            for k in 0..m {
                self.binv[i * m + k] -= f * self.binv[r * m + k];
            }
        }
        self.pivots_since_refactor += 1;
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination and recomputes
    /// the basic values from the nonbasic ones.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (k, &b) in self.basis.iter().enumerate() {
            for i in 0..m {
                a[i * m + k] = self.cols[b][i];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&i, &k| a[i * m + c].abs().total_cmp(&a[k * m + c].abs()))
                .unwrap_or(c);
            if a[p * m + c].abs() < 1e-13 {
                return Err(LpError::Stalled {
                    iterations: self.iterations,
                });
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let piv = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= piv;
                inv[c * m + k] /= piv;
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = a[i * m + c];
                if f != 0.0 {
                    for k in 0..m {
                        a[i * m + k] -= f * a[c * m + k];
                        inv[i * m + k] -= f * inv[c * m + k];
                    }
                }
            }
        }
        self.binv = inv;
        let mut residual = self.rhs.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if self.status[j] != Status::Basic && self.x[j] != 0.0 {
                for i in 0..m {
                    residual[i] -= col[i] * self.x[j];
                }
            }
        }
        for i in 0..m {
            self.x[self.basis[i]] = dot(&self.binv[i * m..(i + 1) * m], &residual);
        }
        self.pivots_since_refactor = 0;
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
