//! Deep-cut ellipsoid method over the same oracle interface as
//! [`accp_solve`](crate::accp::accp_solve), kept as a baseline.
//!
//! The ellipsoid is `{ z : (z - x)^T P^-1 (z - x) <= 1 }`, starting from the
//! ball `x = 0, P = r^2 I`. A cut `a^T z <= b` has depth
//! `alpha = (a^T x - b) / sqrt(a^T P a)`; oracle and objective cuts have
//! `alpha >= 0` and are capped below `1/n`. Feasible centers are cut by
//! the objective at the incumbent value, infeasible ones by the oracle
//! halfspace, and centers outside the ball by the tangent plane of the
//! ball (without calling the oracle). After every update, shallow cuts
//! with the coordinate tangent planes of the ball keep the ellipsoid from
//! growing without bound in directions the oracle never cuts.

use alloc::vec;
use alloc::vec::Vec;

use log::debug;

use crate::accp::{gap_value, AccpOutcome, IterationRecord, OracleAnswer, SolveError, SolveTrace};
use crate::center::CenterStatus;
use crate::linalg::{axpy, dot, norm, Cholesky, Matrix};
use crate::math::sqrt;

/// Keeps the clamped depth strictly below `1/n`.
const DEPTH_MARGIN: f64 = 1e-3;

/// `{ z : (z - x)^T P^-1 (z - x) <= 1 }` with `P = J J^T`.
///
/// Updating the square root `J` instead of `P` keeps the shape positive
/// definite in floating point even when the ellipsoid becomes very thin.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    factor: Matrix,
}

/// Why a cut could not be applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutError {
    /// The halfspace misses the ellipsoid entirely.
    Empty,
    /// The shape matrix degenerated numerically.
    Collapse,
}

impl Ellipsoid {
    pub fn ball(n: usize, radius: f64) -> Self {
        let mut factor = Matrix::zeros(n, n);
        factor.add_diag(radius);
        Ellipsoid {
            center: vec![0.0; n],
            factor,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// The shape matrix `P`.
    pub fn shape(&self) -> Matrix {
        let n = self.dim();
        let mut p = Matrix::zeros(n, n);
        for k in 0..n {
            let col: Vec<f64> = (0..n).map(|i| self.factor[(i, k)]).collect();
            p.add_outer(1.0, &col, &col);
        }
        p
    }

    /// `J^T v`
    fn factor_t_mul(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (i, vi) in v.iter().enumerate() {
            for (k, o) in out.iter_mut().enumerate() {
                *o += self.factor[(i, k)] * vi;
            }
        }
        out
    }

    /// `sqrt(a^T P a)`, the half-width of the ellipsoid along `a`.
    pub fn width(&self, a: &[f64]) -> f64 {
        norm(&self.factor_t_mul(a))
    }

    /// `min { c^T z : z in E } = c^T x - sqrt(c^T P c)`
    pub fn min_linear(&self, c: &[f64]) -> f64 {
        dot(c, &self.center) - self.width(c)
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        let Some(chol) = Cholesky::factor(&self.shape(), 0.0) else {
            return false;
        };
        let diff: Vec<f64> = z.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        dot(&diff, &chol.solve(&diff)) <= 1.0 + tol
    }

    /// Replaces the ellipsoid by the minimum-volume ellipsoid containing
    /// its intersection with `{ z : a^T z <= b }`. Depths are capped below
    /// `1/n`; cuts shallower than `-1/n` leave the ellipsoid unchanged.
    pub fn cut(&mut self, a: &[f64], b: f64) -> Result<(), CutError> {
        let n = self.dim();
        let mut p = self.factor_t_mul(a);
        let sigma = norm(&p);
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(CutError::Collapse);
        }
        p.iter_mut().for_each(|v| *v /= sigma);
        let alpha = (dot(a, &self.center) - b) / sigma;
        if alpha >= 1.0 {
            return Err(CutError::Empty);
        }
        let nf = n as f64;
        if alpha <= -1.0 / nf {
            // too shallow to shrink the ellipsoid
            return Ok(());
        }
        let alpha = alpha.min((1.0 - DEPTH_MARGIN) / nf);
        // g = P a / sqrt(a^T P a) = J p
        let g = self.factor.mul_vec(&p);
        let step = (1.0 + nf * alpha) / (nf + 1.0);
        axpy(-step, &g, &mut self.center);
        // P+ = shrink (P - kappa g g^T) = shrink J (I - beta p p^T)^2 J^T
        let (shrink, kappa) = if n == 1 {
            // on a line the update is exact: the interval loses the cut part
            let half = (1.0 - alpha) / 2.0;
            (half * half, 0.0)
        } else {
            (
                nf * nf * (1.0 - alpha * alpha) / (nf * nf - 1.0),
                2.0 * (1.0 + nf * alpha) / ((nf + 1.0) * (1.0 + alpha)),
            )
        };
        let beta = 1.0 - sqrt(1.0 - kappa);
        self.factor.add_outer(-beta, &g, &p);
        let root = sqrt(shrink);
        for i in 0..n {
            for j in 0..n {
                self.factor[(i, j)] *= root;
            }
        }
        if self.center.iter().any(|v| !v.is_finite()) {
            return Err(CutError::Collapse);
        }
        Ok(())
    }

    /// Applies the tangent planes `+-z_j <= r` of the ball wherever the
    /// ellipsoid sticks out far enough for a shallow cut to help. Without
    /// this, directions the oracle never cuts grow without bound. Returns
    /// the number of cuts applied.
    pub fn clip_to_ball(&mut self, radius: f64) -> Result<usize, CutError> {
        let n = self.dim();
        let min_depth = -0.5 / n as f64;
        let mut applied = 0;
        for j in 0..n {
            for sign in [1.0, -1.0] {
                let width = norm(self.factor.row(j));
                let alpha = (sign * self.center[j] - radius) / width;
                if alpha > min_depth {
                    let mut a = vec![0.0; n];
                    a[j] = sign;
                    self.cut(&a, radius)?;
                    applied += 1;
                }
            }
        }
        Ok(applied)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidConfig {
    pub epsilon: f64,
    /// Cap on updates (oracle and ball cuts); `None` means `50 n^2 + 10000`.
    pub max_iterations: Option<usize>,
}

impl Default for EllipsoidConfig {
    fn default() -> Self {
        EllipsoidConfig {
            epsilon: 1e-6,
            max_iterations: None,
        }
    }
}

impl EllipsoidConfig {
    pub fn max_iterations_for(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(50 * n * n + 10_000).max(1)
    }
}

/// Runs the deep-cut ellipsoid method for `inf { c^T x : x in X, |x| <= r }`.
///
/// The lower bound is the minimum of `c^T z` over the current ellipsoid,
/// kept as a running maximum together with `-r |c|`. The trace records one
/// entry per oracle call.
pub fn ellipsoid_solve<E, F>(
    c: &[f64],
    mut oracle: F,
    radius: f64,
    config: &EllipsoidConfig,
) -> Result<AccpOutcome, SolveError<E>>
where
    F: FnMut(&[f64]) -> Result<OracleAnswer, E>,
{
    let n = c.len();
    let c_norm = norm(c);
    if n == 0 || !(c_norm > 0.0) || !c_norm.is_finite() {
        return Err(SolveError::InvalidInput(
            "objective must be nonzero and finite",
        ));
    }
    if !(radius > 0.0) || !(config.epsilon > 0.0) {
        return Err(SolveError::InvalidInput(
            "radius and epsilon must be positive",
        ));
    }
    let cap = config.max_iterations_for(n);
    let mut e = Ellipsoid::ball(n, radius);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut best_lb = -radius * c_norm;
    let mut trace = SolveTrace::default();
    let c_unit: Vec<f64> = c.iter().map(|v| v / c_norm).collect();

    for k in 1..=cap {
        let l = e.min_linear(c);
        if l > best_lb {
            best_lb = l;
        }
        let gap = match &best {
            Some((_, v)) => gap_value(*v, best_lb.min(*v)),
            None => f64::INFINITY,
        };
        if gap <= config.epsilon {
            let (x_best, objective) = best.expect("finite gap implies an incumbent");
            debug!("ellipsoid converged: k={k} calls={}", trace.oracle_calls);
            return Ok(AccpOutcome {
                x_best,
                objective,
                lower_bound: best_lb.min(objective),
                gap,
                trace,
            });
        }

        let x = e.center.clone();
        let x_norm = norm(&x);
        let (a, b) = if x_norm > radius {
            let a: Vec<f64> = x.iter().map(|v| v / x_norm).collect();
            (a, radius)
        } else {
            trace.oracle_calls += 1;
            let answer = match oracle(&x) {
                Ok(a) => a,
                Err(error) => return Err(SolveError::Oracle { error, trace }),
            };
            let mut record = IterationRecord {
                oracle_feasible: Some(answer == OracleAnswer::Feasible),
                objective: None,
                lower_bound: best_lb,
                gap,
                constraints: 0,
                center_status: CenterStatus::Success,
            };
            let cut = match answer {
                OracleAnswer::Feasible => {
                    trace.feasible_hits += 1;
                    let value = dot(c, &x);
                    record.objective = Some(value);
                    if best.as_ref().is_none_or(|(_, v)| value < *v) {
                        best = Some((x.clone(), value));
                    }
                    let incumbent = best.as_ref().map_or(value, |(_, v)| *v);
                    (c_unit.clone(), incumbent / c_norm)
                }
                OracleAnswer::Halfspace { a, b } => {
                    let a_norm = norm(&a);
                    if a.len() != n || !(a_norm > 0.0) || !a_norm.is_finite() || !b.is_finite() {
                        return Err(SolveError::InvalidInput(
                            "oracle returned a degenerate halfspace",
                        ));
                    }
                    (a.iter().map(|v| v / a_norm).collect(), b / a_norm)
                }
            };
            trace.iterations.push(record);
            cut
        };
        match e.cut(&a, b).and_then(|_| e.clip_to_ball(radius)) {
            Ok(_) => {}
            // The feasible set meets the ellipsoid only on its boundary.
            Err(CutError::Empty) => {
                if let Some((x_best, objective)) = best {
                    return Ok(AccpOutcome {
                        x_best,
                        objective,
                        lower_bound: objective,
                        gap: 0.0,
                        trace,
                    });
                }
                return Err(SolveError::Collapse { trace });
            }
            Err(CutError::Collapse) => return Err(SolveError::Collapse { trace }),
        }
    }
    Err(SolveError::IterationCap { best, trace })
}
