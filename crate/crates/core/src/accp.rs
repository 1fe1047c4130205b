//! Analytic center cutting plane method for `inf { c^T x : x in X, |x| <= r }`
//! where `X` is only known through a separation oracle.
//!
//! The outer approximation is a [`ConvexBody`]. Each iteration centers it,
//! asks the oracle about the center and adds either the normalized
//! objective cut `c^T x <= c^T x_k` (feasible center) or the normalized
//! oracle halfspace. After a successful centering, constraints that are
//! far away in the barrier metric are pruned. The loop stops once the
//! relative gap between the best feasible value and a certified lower
//! bound over the body drops below `epsilon`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use log::{debug, warn};

use crate::center::{
    analytic_center_with, lower_bound, lower_bound_from, CenterError, CenterOptions, CenterStatus,
    ConvexBody,
};
use crate::linalg::{dot, factor_pd, norm};
use crate::lp::{LinearProgram, Sense};
use crate::math::sqrt;

/// Oracle reply for a query point `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleAnswer {
    Feasible,
    /// `{ z : a^T z <= b }` contains the feasible set but not `x`.
    Halfspace {
        a: Vec<f64>,
        b: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccpConfig {
    /// Relative-gap tolerance.
    pub epsilon: f64,
    /// Maximum number of retained linear constraints; `None` means `3n`.
    pub m_max: Option<usize>,
    /// Iteration cap; `None` means `10 n^2`.
    pub max_iterations: Option<usize>,
    /// Accuracy requested from the lower-bound computation.
    pub lower_bound_tol: f64,
    pub center: CenterOptions,
}

impl Default for AccpConfig {
    fn default() -> Self {
        AccpConfig {
            epsilon: 1e-6,
            m_max: None,
            max_iterations: None,
            lower_bound_tol: 1e-8,
            center: CenterOptions::default(),
        }
    }
}

impl AccpConfig {
    pub fn m_max_for(&self, n: usize) -> usize {
        self.m_max.unwrap_or(3 * n).max(n + 1)
    }

    pub fn max_iterations_for(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(10 * n * n).max(1)
    }
}

/// One iteration of a cutting-plane run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// `None` when the iteration ended without an oracle call.
    pub oracle_feasible: Option<bool>,
    /// `c^T x_k` when the query point was feasible.
    pub objective: Option<f64>,
    /// Best certified lower bound so far (`-inf` before the first feasible point).
    pub lower_bound: f64,
    /// Relative gap at the start of the iteration.
    pub gap: f64,
    /// Linear constraints in the outer approximation after pruning.
    pub constraints: usize,
    /// Centering status; always `Success` for the ellipsoid method.
    pub center_status: CenterStatus,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub iterations: Vec<IterationRecord>,
    pub oracle_calls: usize,
    pub feasible_hits: usize,
}

impl SolveTrace {
    pub fn gaps(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.gap).collect()
    }
}

#[derive(Debug, Clone)]
pub struct AccpOutcome {
    pub x_best: Vec<f64>,
    pub objective: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub trace: SolveTrace,
}

#[derive(Debug, Clone)]
pub enum SolveError<E> {
    InvalidInput(&'static str),
    /// Centering failed and its iterate is not interior to the body.
    Geometry {
        trace: SolveTrace,
    },
    /// Iteration cap reached; carries the best feasible point, if any.
    IterationCap {
        best: Option<(Vec<f64>, f64)>,
        trace: SolveTrace,
    },
    /// The ellipsoid lost positive definiteness.
    Collapse {
        trace: SolveTrace,
    },
    Oracle {
        error: E,
        trace: SolveTrace,
    },
}

impl<E> SolveError<E> {
    pub fn trace(&self) -> Option<&SolveTrace> {
        match self {
            SolveError::InvalidInput(_) => None,
            SolveError::Geometry { trace }
            | SolveError::IterationCap { trace, .. }
            | SolveError::Collapse { trace }
            | SolveError::Oracle { trace, .. } => Some(trace),
        }
    }
}

impl<E: fmt::Display> fmt::Display for SolveError<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::InvalidInput(what) => write!(f, "invalid input: {what}"),
            SolveError::Geometry { trace } => write!(
                f,
                "centering failed outside the outer approximation after {} oracle calls",
                trace.oracle_calls
            ),
            SolveError::IterationCap { trace, .. } => write!(
                f,
                "iteration cap reached after {} oracle calls",
                trace.oracle_calls
            ),
            SolveError::Collapse { trace } => write!(
                f,
                "ellipsoid collapsed after {} oracle calls",
                trace.oracle_calls
            ),
            SolveError::Oracle { error, .. } => write!(f, "oracle failed: {error}"),
        }
    }
}

impl<E: fmt::Debug + fmt::Display> core::error::Error for SolveError<E> {}

/// `(upper - lower) / (1 + min(|upper|, |lower|))`
pub fn gap_value(upper: f64, lower: f64) -> f64 {
    if !upper.is_finite() || !lower.is_finite() {
        return f64::INFINITY;
    }
    (upper - lower) / (1.0 + upper.abs().min(lower.abs()))
}

/// Relative gap of `x_best` against a lower bound over `body`.
pub fn relative_gap(c: &[f64], x_best: &[f64], body: &ConvexBody, tol: f64) -> f64 {
    gap_value(dot(c, x_best), lower_bound(body, c, tol))
}

/// `min { c^T x : A x <= b, |x_j| <= r }`, a lower bound over the body
/// that needs no interior; `-inf` if the LP fails.
fn box_bound(body: &ConvexBody, c: &[f64]) -> f64 {
    let n = body.dim();
    let r = body.radius();
    let mut lp = LinearProgram::new(n);
    for (j, cj) in c.iter().enumerate() {
        lp.set_cost(j, *cj);
        lp.set_bounds(j, -r, r);
    }
    for i in 0..body.num_constraints() {
        let (a, b) = body.constraint(i);
        let row: Vec<(usize, f64)> = a.iter().copied().enumerate().collect();
        lp.add_row(&row, Sense::Le, b);
    }
    match lp.solve() {
        Ok(sol) => sol.objective,
        Err(e) => {
            warn!("box bound failed: {e}");
            f64::NEG_INFINITY
        }
    }
}

/// Relevance `eta_i = (b_i - a_i^T x) / sqrt(a_i^T H^-1 a_i)` with `H` the
/// barrier Hessian at `x_star`. At an exact center every `eta_i >= 1`, and
/// `eta_i >= m + 2` certifies that constraint `i` is redundant: the barrier
/// parameter is `m + 2` (the ball term counts twice), and the body lies in
/// the Dikin ellipsoid scaled by the barrier parameter.
pub fn dikin_relevance(body: &ConvexBody, x_star: &[f64]) -> Result<Vec<f64>, CenterError> {
    let h = body
        .barrier_hessian(x_star)
        .ok_or(CenterError::Contract("point is not interior"))?;
    let (chol, _) = factor_pd(&h)?;
    let (_, slacks) = body.slacks(x_star);
    Ok((0..body.num_constraints())
        .map(|i| {
            let (a, _) = body.constraint(i);
            let w = chol.solve(a);
            slacks[i] / sqrt(dot(a, &w))
        })
        .collect())
}

/// Drops constraints that are redundant by the relevance test, then the
/// least relevant ones until at most `m_max` remain. The ball is never
/// touched, and nothing happens while `m <= n`. Returns how many
/// constraints were removed.
pub fn prune(body: &mut ConvexBody, x_star: &[f64], m_max: usize) -> usize {
    let m = body.num_constraints();
    if m <= body.dim() {
        return 0;
    }
    let eta = match dikin_relevance(body, x_star) {
        Ok(eta) => eta,
        Err(e) => {
            warn!("skipping pruning: {e}");
            return 0;
        }
    };
    let threshold = (m + 2) as f64;
    let mut keep: Vec<bool> = eta.iter().map(|e| *e < threshold).collect();
    let mut kept: Vec<usize> = (0..m).filter(|&i| keep[i]).collect();
    if kept.len() > m_max {
        // most relevant first; later constraints win ties
        kept.sort_by(|&i, &j| eta[i].total_cmp(&eta[j]).then(j.cmp(&i)));
        for &i in &kept[m_max..] {
            keep[i] = false;
        }
        kept.truncate(m_max);
    }
    body.retain(|i| keep[i]);
    m - body.num_constraints()
}

/// Runs the analytic center cutting plane method.
///
/// `oracle` is called once per iteration at the current analytic center.
/// Before the first feasible point is found the gap is infinite; after
/// that a certified lower bound over the current body is computed every
/// iteration and the best one so far is used.
pub fn accp_solve<E, F>(
    c: &[f64],
    oracle: F,
    radius: f64,
    config: &AccpConfig,
) -> Result<AccpOutcome, SolveError<E>>
where
    F: FnMut(&[f64]) -> Result<OracleAnswer, E>,
{
    accp_solve_observed(c, oracle, radius, config, |_| {})
}

/// As [`accp_solve`], calling `observe` with the outer approximation at the
/// end of every iteration (after pruning and the new cut).
pub fn accp_solve_observed<E, F, O>(
    c: &[f64],
    mut oracle: F,
    radius: f64,
    config: &AccpConfig,
    mut observe: O,
) -> Result<AccpOutcome, SolveError<E>>
where
    F: FnMut(&[f64]) -> Result<OracleAnswer, E>,
    O: FnMut(&ConvexBody),
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
    let m_max = config.m_max_for(n);
    let cap = config.max_iterations_for(n);
    let mut body = ConvexBody::ball(n, radius);
    let mut x_prev = vec![0.0; n];
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut best_lb = f64::NEG_INFINITY;
    let mut trace = SolveTrace::default();

    for k in 1..=cap {
        let center = analytic_center_with(&body, &x_prev, &config.center);
        if !center.is_success() && !body.is_interior(&center.x) {
            // A cut through the incumbent can leave the body without
            // interior. The bound over the enclosing box may still close
            // the gap.
            if let Some((x_best, value)) = &best {
                let l = box_bound(&body, c).min(*value);
                if l > best_lb {
                    best_lb = l;
                }
                let gap = gap_value(*value, best_lb);
                if gap <= config.epsilon {
                    debug!("accp converged on a flat body: k={k}");
                    return Ok(AccpOutcome {
                        x_best: x_best.clone(),
                        objective: *value,
                        lower_bound: best_lb,
                        gap,
                        trace,
                    });
                }
            }
            return Err(SolveError::Geometry { trace });
        }
        let x = center.x;

        let mut gap = f64::INFINITY;
        if let Some((_, value)) = &best {
            let l = lower_bound_from(&body, c, config.lower_bound_tol, &x).min(*value);
            if l > best_lb {
                best_lb = l;
            }
            gap = gap_value(*value, best_lb);
        }
        if gap <= config.epsilon {
            trace.iterations.push(IterationRecord {
                oracle_feasible: None,
                objective: None,
                lower_bound: best_lb,
                gap,
                constraints: body.num_constraints(),
                center_status: center.status,
            });
            let (x_best, objective) = best.expect("finite gap implies an incumbent");
            debug!(
                "accp converged: k={k} calls={} value={objective}",
                trace.oracle_calls
            );
            return Ok(AccpOutcome {
                x_best,
                objective,
                lower_bound: best_lb,
                gap,
                trace,
            });
        }

        if center.status == CenterStatus::Success {
            prune(&mut body, &x, m_max);
        }

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
            constraints: body.num_constraints(),
            center_status: center.status,
        };
        match answer {
            OracleAnswer::Feasible => {
                trace.feasible_hits += 1;
                let value = dot(c, &x);
                record.objective = Some(value);
                if best.as_ref().is_none_or(|(_, v)| value < *v) {
                    best = Some((x.clone(), value));
                }
                body.add_constraint(c, value);
            }
            OracleAnswer::Halfspace { a, b } => {
                if a.len() != n || !body.add_constraint(&a, b) {
                    return Err(SolveError::InvalidInput(
                        "oracle returned a degenerate halfspace",
                    ));
                }
            }
        }
        debug!(
            "accp k={k} m={} feasible={:?} gap={gap:e} grad={:e}",
            body.num_constraints(),
            record.oracle_feasible,
            center.grad_norm
        );
        trace.iterations.push(record);
        observe(&body);
        x_prev = x;
    }
    Err(SolveError::IterationCap { best, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::convert::Infallible;

    #[test]
    fn gap_formula() {
        assert_eq!(gap_value(-1.0, -1.0), 0.0);
        assert!((gap_value(-0.9, -1.0) - 0.1 / 1.9).abs() < 1e-15);
        assert_eq!(gap_value(0.0, f64::NEG_INFINITY), f64::INFINITY);
    }

    #[test]
    fn relative_gap_on_ball() {
        let body = ConvexBody::ball(2, 1.0);
        let g = relative_gap(&[1.0, 0.0], &[-1.0, 0.0], &body, 1e-9);
        assert!((0.0..=1e-9).contains(&g), "{g}");
    }

    #[test]
    fn always_feasible_oracle() {
        let c = [1.0, 0.0, 0.0];
        let mut calls = 0;
        let out = accp_solve(
            &c,
            |_: &[f64]| -> Result<OracleAnswer, Infallible> {
                calls += 1;
                Ok(OracleAnswer::Feasible)
            },
            1.0,
            &AccpConfig::default(),
        )
        .unwrap();
        assert!((out.objective + 1.0).abs() < 1e-5, "{}", out.objective);
        assert_eq!(out.trace.oracle_calls, calls);
    }

    #[test]
    fn half_ball_oracle() {
        let c = [1.0, 0.0];
        let out = accp_solve(
            &c,
            |x: &[f64]| -> Result<OracleAnswer, Infallible> {
                Ok(if x[0] >= 0.0 {
                    OracleAnswer::Feasible
                } else {
                    OracleAnswer::Halfspace {
                        a: vec![-1.0, 0.0],
                        b: 0.0,
                    }
                })
            },
            1.0,
            &AccpConfig::default(),
        )
        .unwrap();
        assert!(out.objective.abs() < 1e-5, "{}", out.objective);
    }

    #[test]
    fn rejects_zero_objective() {
        let r = accp_solve(
            &[0.0, 0.0],
            |_: &[f64]| -> Result<OracleAnswer, Infallible> { Ok(OracleAnswer::Feasible) },
            1.0,
            &AccpConfig::default(),
        );
        assert!(matches!(r, Err(SolveError::InvalidInput(_))));
    }

    #[test]
    fn oracle_errors_carry_trace() {
        let mut k = 0;
        let r = accp_solve(
            &[1.0, 1.0],
            |_: &[f64]| {
                k += 1;
                if k == 3 {
                    Err("boom")
                } else {
                    Ok(OracleAnswer::Halfspace {
                        a: vec![-1.0, 0.0],
                        b: -0.1 * k as f64,
                    })
                }
            },
            1.0,
            &AccpConfig::default(),
        );
        match r {
            Err(SolveError::Oracle { error, trace }) => {
                assert_eq!(error, "boom");
                assert_eq!(trace.oracle_calls, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    fn interval(cons: &[(f64, f64)]) -> ConvexBody {
        let mut b = ConvexBody::ball(1, 1.0);
        for (a, rhs) in cons {
            b.add_constraint(&[*a], *rhs);
        }
        b
    }

    /// Root of Phi'(x) = 2x/(1 - x^2) + sum a_i / (b_i - a_i x) by bisection.
    fn bisect_center(cons: &[(f64, f64)]) -> f64 {
        let dphi = |x: f64| {
            2.0 * x / (1.0 - x * x) + cons.iter().map(|(a, b)| a / (b - a * x)).sum::<f64>()
        };
        let mut lo = -1.0 + 1e-15;
        let mut hi = cons
            .iter()
            .filter(|(a, _)| *a > 0.0)
            .map(|(a, b)| b / a)
            .fold(1.0 - 1e-15, f64::min)
            - 1e-15;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dphi(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn one_dimensional_pruning() {
        let cons = [(1.0, 0.2), (1.0, 10.0)];
        let xs = bisect_center(&cons);
        let body = interval(&cons);
        // closed form eta: (b - x) / sqrt(1 / Phi''(x))
        let h = 2.0 / (1.0 - xs * xs)
            + 4.0 * xs * xs / ((1.0 - xs * xs) * (1.0 - xs * xs))
            + cons
                .iter()
                .map(|(_, b)| 1.0 / ((b - xs) * (b - xs)))
                .sum::<f64>();
        let expected: Vec<f64> = cons.iter().map(|(_, b)| (b - xs) * sqrt(h)).collect();
        assert!(expected[1] > 4.0 && expected[0] < 4.0);
        let eta = dikin_relevance(&body, &[xs]).unwrap();
        for (e, x) in eta.iter().zip(&expected) {
            assert!((e - x).abs() < 1e-9 * x, "{e} vs {x}");
        }
        let mut pruned = body.clone();
        assert_eq!(prune(&mut pruned, &[xs], 3), 1);
        assert_eq!(pruned.num_constraints(), 1);
        assert_eq!(pruned.constraint(0).1, 0.2);
    }

    #[test]
    fn no_pruning_when_few_constraints() {
        let mut body = ConvexBody::ball(2, 1.0);
        body.add_constraint(&[1.0, 0.0], 0.9);
        body.add_constraint(&[0.0, 1.0], 100.0);
        let before = body.clone();
        assert_eq!(prune(&mut body, &[0.0, 0.0], 6), 0);
        assert_eq!(body, before);
    }

    #[test]
    fn duplicate_constraints_are_both_kept() {
        let cons = [(1.0, 0.3), (1.0, 0.3), (-1.0, 0.5)];
        let xs = bisect_center(&cons);
        let mut body = interval(&cons);
        let eta = dikin_relevance(&body, &[xs]).unwrap();
        assert!(eta.iter().all(|e| *e < 5.0));
        assert_eq!(prune(&mut body, &[xs], 10), 0);
        assert_eq!(body.num_constraints(), 3);
    }

    #[test]
    fn symmetric_pair_has_equal_relevance() {
        let mut body = ConvexBody::ball(1, 2.0);
        body.add_constraint(&[1.0], 1.0);
        body.add_constraint(&[-1.0], 1.0);
        let eta = dikin_relevance(&body, &[0.0]).unwrap();
        assert!((eta[0] - eta[1]).abs() < 1e-12);
        assert!(eta[0] >= 1.0);
    }

    #[test]
    fn m_max_keeps_most_relevant() {
        let mut body = ConvexBody::ball(1, 1.0);
        for b in [0.5, 0.6, 0.7, -0.5f64] {
            let a = if b < 0.0 { -1.0 } else { 1.0 };
            body.add_constraint(&[a], b.abs());
        }
        let c = crate::center::analytic_center(&body, &[0.0]);
        assert!(c.is_success());
        let eta = dikin_relevance(&body, &c.x).unwrap();
        prune(&mut body, &c.x, 2);
        assert_eq!(body.num_constraints(), 2);
        let mut sorted = eta.clone();
        sorted.sort_by(f64::total_cmp);
        let kept = dikin_relevance(&body, &c.x).unwrap();
        assert!(kept.iter().all(|e| *e <= sorted[1] + 1e-12));
    }
}
