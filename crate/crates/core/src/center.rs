//! Analytic centers of ball-and-polyhedron bodies
//! `Q = { x : |x|^2 <= r^2, a_i^T x <= b_i }`.
//!
//! The center minimizes `Phi(x) = -log(r^2 - |x|^2) - sum log(b_i - a_i^T x)`.
//! Because the previous center usually violates the newest cut, the
//! minimization is started infeasibly: slacks `s_r`, `s_A` are introduced
//! with multipliers `lambda_r`, `lambda_A` and Newton's method is applied to
//! the stationarity conditions of the Lagrangian
//!
//! ```text
//! L = -log s_r - sum log s_A + lambda_r (s_r - r^2 + |x|^2) + lambda_A^T (s_A - b + A x).
//! ```
//!
//! There is no line search on the residual norm: it is not monotone along
//! the iterates and backtracking would stall. Steps are only shortened to
//! keep `s_r`, `s_A` and `lambda_r` positive.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{axpy, dot, norm, solve_pd, LinalgError, Matrix};
use crate::math::{ln, sqrt};

#[derive(Debug, Clone, PartialEq)]
pub enum CenterError {
    /// A precondition on the iterate was violated.
    Contract(&'static str),
    Linalg(LinalgError),
}

impl fmt::Display for CenterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CenterError::Contract(what) => write!(f, "contract violated: {what}"),
            CenterError::Linalg(e) => write!(f, "Newton system: {e}"),
        }
    }
}

impl core::error::Error for CenterError {}

impl From<LinalgError> for CenterError {
    fn from(e: LinalgError) -> Self {
        CenterError::Linalg(e)
    }
}

/// Ball of radius `r` intersected with halfspaces `a_i^T x <= b_i`,
/// `|a_i| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexBody {
    n: usize,
    radius: f64,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl ConvexBody {
    pub fn ball(n: usize, radius: f64) -> Self {
        assert!(radius > 0.0, "radius must be positive");
        ConvexBody {
            n,
            radius,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    /// Adds `a^T x / |a| <= b / |a|`. Returns `false` (and adds nothing)
    /// when `a` is zero or not finite.
    pub fn add_constraint(&mut self, a: &[f64], b: f64) -> bool {
        assert_eq!(a.len(), self.n);
        let na = norm(a);
        if !(na > 0.0) || !na.is_finite() || !b.is_finite() {
            return false;
        }
        self.rows.push(a.iter().map(|v| v / na).collect());
        self.rhs.push(b / na);
        true
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn constraint(&self, i: usize) -> (&[f64], f64) {
        (&self.rows[i], self.rhs[i])
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Keeps the constraints whose index satisfies `keep`, in order.
    pub fn retain(&mut self, keep: impl FnMut(usize) -> bool) {
        let mut i = 0;
        let flags: Vec<bool> = (0..self.rows.len()).map(keep).collect();
        self.rows.retain(|_| {
            i += 1;
            flags[i - 1]
        });
        let mut i = 0;
        self.rhs.retain(|_| {
            i += 1;
            flags[i - 1]
        });
    }

    /// `A x`
    pub fn a_mul(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|a| dot(a, x)).collect()
    }

    /// `A^T v`
    pub fn at_mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (a, vi) in self.rows.iter().zip(v) {
            axpy(*vi, a, &mut out);
        }
        out
    }

    /// `(r^2 - |x|^2, b - A x)`
    pub fn slacks(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let ball = self.radius * self.radius - dot(x, x);
        let lin = self
            .rows
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| b - dot(a, x))
            .collect();
        (ball, lin)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let (sr, sa) = self.slacks(x);
        sr >= -tol && sa.iter().all(|s| *s >= -tol)
    }

    pub fn is_interior(&self, x: &[f64]) -> bool {
        let (sr, sa) = self.slacks(x);
        sr > 0.0 && sa.iter().all(|s| *s > 0.0)
    }

    /// `Phi(x)`, or `None` outside the interior.
    pub fn barrier(&self, x: &[f64]) -> Option<f64> {
        let (sr, sa) = self.slacks(x);
        if !(sr > 0.0) || sa.iter().any(|s| !(*s > 0.0)) {
            return None;
        }
        Some(-ln(sr) - sa.iter().map(|s| ln(*s)).sum::<f64>())
    }

    pub fn barrier_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let (sr, sa) = self.slacks(x);
        if !(sr > 0.0) || sa.iter().any(|s| !(*s > 0.0)) {
            return None;
        }
        let mut g: Vec<f64> = x.iter().map(|v| 2.0 * v / sr).collect();
        for (a, s) in self.rows.iter().zip(&sa) {
            axpy(1.0 / s, a, &mut g);
        }
        Some(g)
    }

    /// `2/s_r I + 4/s_r^2 x x^T + sum a_i a_i^T / s_i^2`
    pub fn barrier_hessian(&self, x: &[f64]) -> Option<Matrix> {
        let (sr, sa) = self.slacks(x);
        if !(sr > 0.0) || sa.iter().any(|s| !(*s > 0.0)) {
            return None;
        }
        let mut h = Matrix::zeros(self.n, self.n);
        h.add_diag(2.0 / sr);
        h.add_outer(4.0 / (sr * sr), x, x);
        for (a, s) in self.rows.iter().zip(&sa) {
            h.add_outer(1.0 / (s * s), a, a);
        }
        Some(h)
    }
}

/// Primal-dual iterate `(x, s_r, s_A, lambda_r, lambda_A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonState {
    pub x: Vec<f64>,
    pub s_r: f64,
    pub s_a: Vec<f64>,
    pub lambda_r: f64,
    pub lambda_a: Vec<f64>,
}

/// Newton direction, same layout as [`NewtonState`].
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonStep {
    pub dx: Vec<f64>,
    pub ds_r: f64,
    pub ds_a: Vec<f64>,
    pub dlambda_r: f64,
    pub dlambda_a: Vec<f64>,
}

const INIT_SLACK_FLOOR: f64 = 1e-10;

impl NewtonState {
    /// Infeasible start at `x0`: slacks take the true gaps when those are
    /// positive and 1 otherwise, `lambda_A = 0`. Gaps at rounding level
    /// count as zero: a cut through `x0` would otherwise start with a slack
    /// near `1e-17` and a gradient near `1e17`.
    pub fn initial(body: &ConvexBody, x0: &[f64]) -> Self {
        let (sr, sa) = body.slacks(x0);
        let floor = INIT_SLACK_FLOOR * (1.0 + norm(x0));
        let lambda_r = if cfg!(feature = "paper-faithful-init") {
            -1.0
        } else {
            1.0
        };
        NewtonState {
            x: x0.to_vec(),
            s_r: if sr > floor * body.radius * body.radius {
                sr
            } else {
                1.0
            },
            s_a: sa
                .into_iter()
                .zip(&body.rhs)
                .map(|(s, b)| if s > floor * (1.0 + b.abs()) { s } else { 1.0 })
                .collect(),
            lambda_r,
            lambda_a: vec![0.0; body.num_constraints()],
        }
    }

    /// `self + t * step`
    pub fn advanced(&self, step: &NewtonStep, t: f64) -> Self {
        let mut x = self.x.clone();
        axpy(t, &step.dx, &mut x);
        let mut s_a = self.s_a.clone();
        axpy(t, &step.ds_a, &mut s_a);
        let mut lambda_a = self.lambda_a.clone();
        axpy(t, &step.dlambda_a, &mut lambda_a);
        NewtonState {
            x,
            s_r: self.s_r + t * step.ds_r,
            s_a,
            lambda_r: self.lambda_r + t * step.dlambda_r,
            lambda_a,
        }
    }

    fn check(&self, body: &ConvexBody) -> Result<(), CenterError> {
        if self.x.len() != body.dim() || self.s_a.len() != body.num_constraints() {
            return Err(CenterError::Contract("state does not match body"));
        }
        if !(self.s_r > 0.0) || self.s_a.iter().any(|s| !(*s > 0.0)) {
            return Err(CenterError::Contract("slacks must be positive"));
        }
        Ok(())
    }
}

impl NewtonStep {
    pub fn norm(&self) -> f64 {
        let sq = dot(&self.dx, &self.dx)
            + self.ds_r * self.ds_r
            + dot(&self.ds_a, &self.ds_a)
            + self.dlambda_r * self.dlambda_r
            + dot(&self.dlambda_a, &self.dlambda_a);
        sqrt(sq)
    }
}

/// Gradient of the Lagrangian, stacked as
/// `(2 lambda_r x + A^T lambda_A, -1/s_r + lambda_r, -1/s_A + lambda_A,
///   s_r - r^2 + |x|^2, s_A - b + A x)`.
pub fn lagrangian_gradient(
    state: &NewtonState,
    body: &ConvexBody,
) -> Result<Vec<f64>, CenterError> {
    state.check(body)?;
    let n = body.dim();
    let m = body.num_constraints();
    let mut g = Vec::with_capacity(n + 2 * m + 2);
    let mut top = body.at_mul(&state.lambda_a);
    axpy(2.0 * state.lambda_r, &state.x, &mut top);
    g.extend(top);
    g.push(-1.0 / state.s_r + state.lambda_r);
    g.extend(
        state
            .s_a
            .iter()
            .zip(&state.lambda_a)
            .map(|(s, l)| -1.0 / s + l),
    );
    g.push(state.s_r - body.radius * body.radius + dot(&state.x, &state.x));
    let ax = body.a_mul(&state.x);
    g.extend(
        state
            .s_a
            .iter()
            .zip(&body.rhs)
            .zip(&ax)
            .map(|((s, b), ax)| s - b + ax),
    );
    Ok(g)
}

/// Newton direction for the Lagrangian stationarity system.
///
/// `dx` solves
/// `[2 lambda_r I + 4/s_r^2 x x^T + A^T S^-2 A] dx
///   = 2 (r^2 - |x|^2 - 2 s_r)/s_r^2 x + A^T S^-2 (b - A x - 2 s_A)`
/// and the remaining blocks follow by back substitution.
pub fn newton_step(state: &NewtonState, body: &ConvexBody) -> Result<NewtonStep, CenterError> {
    state.check(body)?;
    if !cfg!(feature = "paper-faithful-init") && !(state.lambda_r > 0.0) {
        return Err(CenterError::Contract("lambda_r must be positive"));
    }
    let n = body.dim();
    let x = &state.x;
    let r2 = body.radius * body.radius;
    let xx = dot(x, x);
    let sr2 = state.s_r * state.s_r;

    let mut mtx = Matrix::zeros(n, n);
    mtx.add_diag(2.0 * state.lambda_r);
    mtx.add_outer(4.0 / sr2, x, x);
    let mut rhs: Vec<f64> = x
        .iter()
        .map(|v| 2.0 * v * (r2 - xx - 2.0 * state.s_r) / sr2)
        .collect();
    let ax = body.a_mul(x);
    for i in 0..body.num_constraints() {
        let (a, b) = body.constraint(i);
        let w = 1.0 / (state.s_a[i] * state.s_a[i]);
        mtx.add_outer(w, a, a);
        axpy(w * (b - ax[i] - 2.0 * state.s_a[i]), a, &mut rhs);
    }
    let dx = solve_pd(&mtx, &rhs)?.x;

    let ds_r = -state.s_r + r2 - xx - 2.0 * dot(x, &dx);
    let adx = body.a_mul(&dx);
    let ds_a: Vec<f64> = (0..body.num_constraints())
        .map(|i| -state.s_a[i] + body.rhs[i] - ax[i] - adx[i])
        .collect();
    let dlambda_r = -state.lambda_r + 1.0 / state.s_r - ds_r / sr2;
    let dlambda_a = (0..body.num_constraints())
        .map(|i| {
            let s = state.s_a[i];
            -state.lambda_a[i] + 1.0 / s - ds_a[i] / (s * s)
        })
        .collect();
    Ok(NewtonStep {
        dx,
        ds_r,
        ds_a,
        dlambda_r,
        dlambda_a,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterOptions {
    pub max_iterations: usize,
    /// Tolerance on the Lagrangian gradient norm.
    pub tolerance: f64,
    /// Fraction of the distance to the positivity boundary taken per step.
    pub step_fraction: f64,
}

impl Default for CenterOptions {
    fn default() -> Self {
        CenterOptions {
            max_iterations: 50,
            tolerance: 1e-8,
            step_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterStatus {
    Success,
    Failure,
}

#[derive(Debug, Clone)]
pub struct CenterResult {
    pub x: Vec<f64>,
    pub status: CenterStatus,
    pub grad_norm: f64,
    pub iterations: usize,
    /// The iterate `x` was taken from.
    pub state: NewtonState,
    /// Gradient norm before each step, for diagnostics.
    pub grad_trace: Vec<f64>,
}

impl CenterResult {
    pub fn is_success(&self) -> bool {
        self.status == CenterStatus::Success
    }
}

/// Largest `t >= 0` keeping `s_r`, `s_A` and `lambda_r` nonnegative along `step`.
fn step_cap(state: &NewtonState, step: &NewtonStep) -> f64 {
    let mut cap = f64::INFINITY;
    let mut limit = |v: f64, dv: f64| {
        if dv < 0.0 {
            cap = cap.min(v / -dv);
        }
    };
    limit(state.s_r, step.ds_r);
    for (s, ds) in state.s_a.iter().zip(&step.ds_a) {
        limit(*s, *ds);
    }
    limit(state.lambda_r, step.dlambda_r);
    cap.max(0.0)
}

pub fn analytic_center(body: &ConvexBody, x0: &[f64]) -> CenterResult {
    analytic_center_with(body, x0, &CenterOptions::default())
}

/// Infeasible-start Newton method.
///
/// Returns success once the gradient norm is at most `tolerance`, every
/// `lambda_A` is nonnegative, `x` is interior, and either the next step
/// would not reduce the gradient norm or the iteration budget is spent.
/// On failure the iterate with the smallest gradient norm seen is returned.
pub fn analytic_center_with(body: &ConvexBody, x0: &[f64], opts: &CenterOptions) -> CenterResult {
    let mut state = NewtonState::initial(body, x0);
    let mut trace = Vec::new();
    let mut best: Option<(f64, NewtonState, usize)> = None;
    let grad_norm =
        |s: &NewtonState| lagrangian_gradient(s, body).map_or(f64::INFINITY, |g| norm(&g));

    for k in 1..=opts.max_iterations {
        let g0 = grad_norm(&state);
        trace.push(g0);
        if best.as_ref().is_none_or(|b| g0 < b.0) {
            best = Some((g0, state.clone(), k));
        }
        let step = match newton_step(&state, body) {
            Ok(s) => s,
            Err(_) => break,
        };
        let cap = step_cap(&state, &step);
        let mut t = (opts.step_fraction * cap).min(1.0);
        let mut trial = state.advanced(&step, t);
        if trial.check(body).is_err() {
            // capped step landed exactly on the boundary
            t = 0.999 * opts.step_fraction * cap;
            trial = state.advanced(&step, t);
        }
        let gt = grad_norm(&trial);
        if g0 <= opts.tolerance
            && state.lambda_a.iter().all(|l| *l >= 0.0)
            && (gt >= g0 || k == opts.max_iterations)
            && body.is_interior(&state.x)
        {
            return CenterResult {
                x: state.x.clone(),
                status: CenterStatus::Success,
                grad_norm: g0,
                iterations: k,
                state,
                grad_trace: trace,
            };
        }
        if trial.check(body).is_err() {
            break;
        }
        state = trial;
    }
    let g = grad_norm(&state);
    if best.as_ref().is_none_or(|b| g < b.0) {
        best = Some((g, state, opts.max_iterations));
    }
    let (grad_norm, state, _) = best.expect("at least one iterate");
    CenterResult {
        x: state.x.clone(),
        status: CenterStatus::Failure,
        grad_norm,
        iterations: trace.len(),
        state,
        grad_trace: trace,
    }
}

/// Valid lower bound on `min { c^T x : x in body }` from multipliers `lambda >= 0`:
/// `-r |c + A^T lambda| - b^T lambda`.
pub fn dual_bound(body: &ConvexBody, c: &[f64], lambda: &[f64]) -> f64 {
    let mut v = c.to_vec();
    for (a, l) in body.rows.iter().zip(lambda) {
        axpy(*l, a, &mut v);
    }
    -body.radius * norm(&v) - dot(&body.rhs, lambda)
}

/// Lower bound `l` on `min { c^T x : x in body }` with
/// `l <= min <= l + tol (1 + |l|)` when path following succeeds, and the
/// trivial `-r |c|` otherwise.
pub fn lower_bound(body: &ConvexBody, c: &[f64], tol: f64) -> f64 {
    let center = analytic_center(body, &vec![0.0; body.dim()]);
    if !body.is_interior(&center.x) {
        return -body.radius * norm(c);
    }
    lower_bound_from(body, c, tol, &center.x)
}

/// As [`lower_bound`], starting the barrier path at the interior point `start`.
///
/// Follows the central path of `t c^T x + Phi(x)` for `t = 1, 10, 100, ...`
/// with damped Newton steps. At every centered point the multipliers
/// `lambda_i = 1 / (t s_i)` give the certified bound [`dual_bound`], whose
/// gap to `c^T x` is at most `(m + 2) / t` on the exact path (the ball
/// term has barrier parameter 2).
///
/// The slacks are carried along with `x` instead of being recomputed as
/// `b - A x`: near the boundary the recomputation cancels and the
/// multipliers, hence the bound, lose most of their digits.
pub fn lower_bound_from(body: &ConvexBody, c: &[f64], tol: f64, start: &[f64]) -> f64 {
    let m = body.num_constraints();
    let mut best = -body.radius * norm(c);
    if !body.is_interior(start) || norm(c) == 0.0 {
        return best;
    }
    let (sr, sa) = body.slacks(start);
    let mut p = PathPoint {
        x: start.to_vec(),
        sr,
        sa,
    };
    let mut t = 1.0;
    for _ in 0..40 {
        if !center_on_path(body, c, t, &mut p) {
            break;
        }
        let lambda: Vec<f64> = p.sa.iter().map(|s| 1.0 / (t * s)).collect();
        let l = dual_bound(body, c, &lambda);
        if l > best {
            best = l;
        }
        let value = dot(c, &p.x);
        if value - best <= tol * (1.0 + best.abs()) {
            break;
        }
        if (m as f64 + 2.0) / t <= 1e-3 * tol * (1.0 + value.abs()) {
            // path exhausted without certifying; keep what we have
            break;
        }
        t *= 10.0;
    }
    best
}

struct PathPoint {
    x: Vec<f64>,
    sr: f64,
    sa: Vec<f64>,
}

/// Damped Newton on `t c^T x + Phi(x)`; returns false if it cannot proceed.
fn center_on_path(body: &ConvexBody, c: &[f64], t: f64, p: &mut PathPoint) -> bool {
    let n = body.dim();
    for _ in 0..100 {
        let mut g: Vec<f64> = p.x.iter().map(|v| 2.0 * v / p.sr).collect();
        let mut h = Matrix::zeros(n, n);
        h.add_diag(2.0 / p.sr);
        h.add_outer(4.0 / (p.sr * p.sr), &p.x, &p.x);
        for (a, s) in body.rows.iter().zip(&p.sa) {
            axpy(1.0 / s, a, &mut g);
            h.add_outer(1.0 / (s * s), a, a);
        }
        axpy(t, c, &mut g);
        let Ok(sol) = solve_pd(&h, &g) else {
            return false;
        };
        let dx = sol.x;
        let dec2 = dot(&g, &dx);
        if !(dec2 >= 0.0) {
            return false;
        }
        if dec2 <= 1e-20 {
            return true;
        }
        let adx = body.a_mul(&dx);
        let xdx = dot(&p.x, &dx);
        let dxdx = dot(&dx, &dx);
        let dec = sqrt(dec2);
        let mut alpha = if dec > 0.25 { 1.0 / (1.0 + dec) } else { 1.0 };
        loop {
            let sr = p.sr + 2.0 * alpha * xdx - alpha * alpha * dxdx;
            if sr > 0.0 && p.sa.iter().zip(&adx).all(|(s, d)| s + alpha * d > 0.0) {
                p.sr = sr;
                for (s, d) in p.sa.iter_mut().zip(&adx) {
                    *s += alpha * d;
                }
                axpy(-alpha, &dx, &mut p.x);
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                return dec2 <= 1e-12;
            }
        }
        if dec2 <= 1e-14 {
            return true;
        }
    }
    true
}
