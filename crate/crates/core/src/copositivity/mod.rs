//! Copositivity testing.
//!
//! `X` is copositive iff `min { y^T X y : e^T y = 1, y >= 0 }` is
//! nonnegative. That standard quadratic program has the same value as the
//! mixed-integer linear program
//!
//! ```text
//! min  -mu
//! s.t. X y + mu e - nu = 0,  e^T y = 1,
//!      0 <= y_i <= z_i,  0 <= nu_i <= M (1 - z_i),  z_i in {0, 1},
//! ```
//!
//! with `M = 2 d max |X_kl|`. [`CopositivityModel`] holds one instance of
//! that program together with branching restrictions, [`BranchAndBound`]
//! solves it, and [`solve_model`] adds the rounding repair that recovers an
//! optimal complementary solution when a backend returns a solution with
//! `y^T nu > 0`.

mod bnb;
mod enumerate;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use bnb::{BranchAndBound, BranchStats};
pub use enumerate::{brute_force_simplex_min, EnumerationError, MAX_ENUMERATION_DIM};

use crate::linalg::{dot, SymMatrix};
use crate::lp::{LinearProgram, Sense};

/// Verdict threshold: `y^T X y >= -COPOSITIVE_TOL * max|X_kl|` counts as nonnegative.
pub const COPOSITIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum MilpError {
    /// No binary pattern satisfies the restrictions.
    Infeasible,
    /// The LP engine gave up; carries how far the search got.
    Numeric {
        nodes_explored: usize,
        open_nodes: usize,
        depth: usize,
    },
}

impl fmt::Display for MilpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MilpError::Infeasible => f.write_str("copositivity model is infeasible"),
            MilpError::Numeric {
                nodes_explored,
                open_nodes,
                depth,
            } => write!(
                f,
                "LP relaxation failed after {nodes_explored} nodes ({open_nodes} open, depth {depth})"
            ),
        }
    }
}

impl core::error::Error for MilpError {}

/// One instance of the copositivity MILP.
#[derive(Debug, Clone)]
pub struct CopositivityModel {
    x: SymMatrix,
    big_m: f64,
    fixed_z: Vec<Option<bool>>,
    excluded: Vec<Vec<bool>>,
}

impl CopositivityModel {
    pub fn new(x: SymMatrix) -> Self {
        let d = x.dim();
        let big_m = 2.0 * d as f64 * x.max_abs();
        CopositivityModel {
            x,
            big_m,
            fixed_z: vec![None; d],
            excluded: Vec::new(),
        }
    }

    /// Replaces the big-M constant.
    pub fn with_big_m(mut self, big_m: f64) -> Self {
        assert!(big_m >= 0.0);
        self.big_m = big_m;
        self
    }

    /// Fixes every binary to `pattern`.
    pub fn with_fixed(&self, pattern: &[bool]) -> Self {
        let mut m = self.clone();
        m.fixed_z = pattern.iter().map(|b| Some(*b)).collect();
        m
    }

    pub fn with_fixed_entry(mut self, i: usize, value: bool) -> Self {
        self.fixed_z[i] = Some(value);
        self
    }

    /// Adds the no-good cut forbidding `pattern`.
    pub fn with_excluded(&self, pattern: &[bool]) -> Self {
        let mut m = self.clone();
        m.excluded.push(pattern.to_vec());
        m
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.x
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn fixed_z(&self) -> &[Option<bool>] {
        &self.fixed_z
    }

    pub fn excluded_patterns(&self) -> &[Vec<bool>] {
        &self.excluded
    }

    /// Whether `pattern` satisfies the fixings and every no-good cut.
    pub fn admits(&self, pattern: &[bool]) -> bool {
        let fixed_ok = self
            .fixed_z
            .iter()
            .zip(pattern)
            .all(|(f, p)| f.is_none_or(|v| v == *p));
        fixed_ok && self.excluded.iter().all(|e| e.as_slice() != pattern)
    }

    /// Complementarity tolerance `1e-8 (1 + max|X_kl|)`.
    pub fn complementarity_tol(&self) -> f64 {
        1e-8 * (1.0 + self.x.max_abs())
    }

    // Column layout: y in 0..d, z in d..2d, mu at 2d, nu in 2d+1..3d+1.
    pub(crate) fn y_col(&self, i: usize) -> usize {
        i
    }
    pub(crate) fn z_col(&self, i: usize) -> usize {
        self.dim() + i
    }
    pub(crate) fn mu_col(&self) -> usize {
        2 * self.dim()
    }
    pub(crate) fn nu_col(&self, i: usize) -> usize {
        2 * self.dim() + 1 + i
    }

    /// The LP relaxation (`0 <= z <= 1`) under the given bounds on `z`.
    pub(crate) fn relaxation(&self, z_bounds: &[(f64, f64)]) -> LinearProgram {
        let d = self.dim();
        let mut lp = LinearProgram::new(3 * d + 1);
        lp.set_cost(self.mu_col(), -1.0);
        lp.set_bounds(self.mu_col(), f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..d {
            lp.set_bounds(self.y_col(i), 0.0, 1.0);
            lp.set_bounds(self.z_col(i), z_bounds[i].0, z_bounds[i].1);
            lp.set_bounds(self.nu_col(i), 0.0, f64::INFINITY);
        }
        let mut entries = Vec::with_capacity(d + 2);
        for i in 0..d {
            entries.clear();
            for k in 0..d {
                let v = self.x.get(i, k);
                if v != 0.0 {
                    entries.push((self.y_col(k), v));
                }
            }
            entries.push((self.mu_col(), 1.0));
            entries.push((self.nu_col(i), -1.0));
            lp.add_row(&entries, Sense::Eq, 0.0);
        }
        let simplex: Vec<(usize, f64)> = (0..d).map(|i| (self.y_col(i), 1.0)).collect();
        lp.add_row(&simplex, Sense::Eq, 1.0);
        for i in 0..d {
            lp.add_row(
                &[(self.y_col(i), 1.0), (self.z_col(i), -1.0)],
                Sense::Le,
                0.0,
            );
            lp.add_row(
                &[(self.nu_col(i), 1.0), (self.z_col(i), self.big_m)],
                Sense::Le,
                self.big_m,
            );
        }
        for pattern in &self.excluded {
            let ones = pattern.iter().filter(|p| **p).count();
            let row: Vec<(usize, f64)> = pattern
                .iter()
                .enumerate()
                .map(|(i, p)| (self.z_col(i), if *p { -1.0 } else { 1.0 }))
                .collect();
            lp.add_row(&row, Sense::Ge, 1.0 - ones as f64);
        }
        lp
    }
}

/// Solution `(y, z, mu, nu)` of the copositivity MILP.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub mu: f64,
    pub nu: Vec<f64>,
    /// `-mu`
    pub objective: f64,
}

impl MilpSolution {
    /// `y^T nu`, zero for complementary solutions.
    pub fn complementarity(&self) -> f64 {
        dot(&self.y, &self.nu)
    }

    /// Round half up.
    pub fn rounded_z(&self) -> Vec<bool> {
        self.z.iter().map(|v| *v >= 0.5).collect()
    }

    /// `|X y + mu e - nu|_inf`
    pub fn residual(&self, x: &SymMatrix) -> f64 {
        x.mul_vec(&self.y)
            .iter()
            .zip(&self.nu)
            .fold(0.0f64, |m, (xy, nu)| m.max((xy + self.mu - nu).abs()))
    }
}

/// Anything that returns an optimal solution of a [`CopositivityModel`].
pub trait MilpBackend {
    fn solve(&mut self, model: &CopositivityModel) -> Result<MilpSolution, MilpError>;
}

/// Solves `model` and repairs non-complementary answers.
///
/// If the backend's solution has `y^T nu` above the complementarity
/// tolerance and beats `upper`, the model is re-solved twice: once with `z`
/// fixed to its rounding, once with that pattern forbidden. The better of
/// the two is returned; when the fixed model is infeasible only the second
/// branch is followed, and when both are infeasible the unrepaired solution
/// is returned.
pub fn solve_model<B: MilpBackend>(
    backend: &mut B,
    model: &CopositivityModel,
    upper: f64,
) -> Result<MilpSolution, MilpError> {
    let sol = backend.solve(model)?;
    if sol.complementarity() <= model.complementarity_tol() || sol.objective >= upper {
        return Ok(sol);
    }
    let pattern = sol.rounded_z();
    if model.excluded.contains(&pattern) {
        // The backend ignored its own no-good cut; nothing left to split on.
        return Ok(sol);
    }
    let fixed = model.with_fixed(&pattern);
    let rest = model.with_excluded(&pattern);
    match backend.solve(&fixed) {
        Ok(bar) => match solve_model(backend, &rest, bar.objective) {
            Ok(other) if other.objective < bar.objective => Ok(other),
            Ok(_) | Err(MilpError::Infeasible) => Ok(bar),
            Err(e) => Err(e),
        },
        Err(MilpError::Infeasible) => match solve_model(backend, &rest, f64::INFINITY) {
            // Both branches lost to tolerances; keep the unrepaired answer.
            Err(MilpError::Infeasible) => Ok(sol),
            other => other,
        },
        Err(e) => Err(e),
    }
}

/// Result of a copositivity test.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleVerdict {
    Copositive,
    /// `y >= 0`, `sum y = 1` and `value = y^T X y < 0`. Every copositive
    /// matrix `X'` satisfies `y^T X' y >= 0`.
    Cut {
        y: Vec<f64>,
        value: f64,
    },
}

impl OracleVerdict {
    pub fn is_copositive(&self) -> bool {
        matches!(self, OracleVerdict::Copositive)
    }
}

/// Tests `x` for copositivity with the default branch and bound backend.
pub fn test_copositive(x: &SymMatrix) -> Result<OracleVerdict, MilpError> {
    test_copositive_with(&mut BranchAndBound::default(), x)
}

pub fn test_copositive_with<B: MilpBackend>(
    backend: &mut B,
    x: &SymMatrix,
) -> Result<OracleVerdict, MilpError> {
    if x.is_zero() {
        return Ok(OracleVerdict::Copositive);
    }
    let model = CopositivityModel::new(x.clone());
    let sol = solve_model(backend, &model, f64::INFINITY)?;
    let mut y: Vec<f64> = sol.y.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = y.iter().sum();
    if !(total > 0.0) {
        // Degenerate backend output; fall back on the best vertex.
        return Ok(vertex_verdict(x));
    }
    y.iter_mut().for_each(|v| *v /= total);
    let value = x.quad_form(&y);
    if value >= -COPOSITIVE_TOL * x.max_abs() {
        Ok(OracleVerdict::Copositive)
    } else {
        Ok(OracleVerdict::Cut { y, value })
    }
}

fn vertex_verdict(x: &SymMatrix) -> OracleVerdict {
    let (i, v) = (0..x.dim())
        .map(|i| (i, x.get(i, i)))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    if v >= 0.0 {
        OracleVerdict::Copositive
    } else {
        let mut y = vec![0.0; x.dim()];
        y[i] = 1.0;
        OracleVerdict::Cut { y, value: v }
    }
}
