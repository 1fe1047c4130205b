//! Complete positivity through copositive cuts.
//!
//! `C` is completely positive iff `<C, X> >= 0` for every copositive `X`.
//! We minimize `<C, X>` over copositive `X` with `|vec(X)| <= 1`; a clearly
//! negative optimum yields a copositive `X` separating `C` from the
//! completely positive cone.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::accp::{accp_solve, AccpConfig, AccpOutcome, OracleAnswer, SolveError, SolveTrace};
use crate::copositivity::{test_copositive, MilpError, OracleVerdict};
use crate::ellipsoid::{ellipsoid_solve, EllipsoidConfig};
use crate::linalg::{mat, mat_adjoint, norm, vec, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    CompletelyPositive,
    NotCompletelyPositive,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::CompletelyPositive => "completely_positive",
            Verdict::NotCompletelyPositive => "not_completely_positive",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    Accp,
    Ellipsoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpOptions {
    pub solver: SolverKind,
    /// Relative-gap tolerance handed to the solver.
    pub epsilon: f64,
    /// `C` is declared not completely positive when the optimum is below
    /// `-cp_threshold * |mat_adjoint(C)|`.
    pub cp_threshold: f64,
    pub accp: AccpConfig,
    pub ellipsoid: EllipsoidConfig,
}

impl Default for CpOptions {
    fn default() -> Self {
        CpOptions {
            solver: SolverKind::Accp,
            epsilon: 1e-6,
            cp_threshold: 1e-2,
            accp: AccpConfig::default(),
            ellipsoid: EllipsoidConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub verdict: Verdict,
    /// Copositive `X` with `<C, X> < 0`; present exactly when the verdict is
    /// [`Verdict::NotCompletelyPositive`].
    pub cut_matrix: Option<SymMatrix>,
    /// Best copositive matrix found, whatever the verdict.
    pub best_matrix: Option<SymMatrix>,
    /// `<C, X>` at `best_matrix` (0 when nothing was found).
    pub objective: f64,
    /// Certified lower bound on `<C, X>` over the feasible set.
    pub lower_bound: f64,
    /// Completely positive, but with a slightly negative optimum.
    pub near_boundary: bool,
    pub trace: SolveTrace,
    /// Why the verdict is inconclusive.
    pub message: Option<String>,
}

impl Certificate {
    fn empty(verdict: Verdict) -> Self {
        Certificate {
            verdict,
            cut_matrix: None,
            best_matrix: None,
            objective: 0.0,
            lower_bound: 0.0,
            near_boundary: false,
            trace: SolveTrace::default(),
            message: None,
        }
    }
}

/// Decides complete positivity of `c` with the default options.
pub fn completely_positive_cut(c: &SymMatrix) -> Certificate {
    completely_positive_cut_with(c, &CpOptions::default())
}

pub fn completely_positive_cut_with(c: &SymMatrix, options: &CpOptions) -> Certificate {
    let objective = mat_adjoint(c).into_inner();
    let scale = norm(&objective);
    if c.is_zero() {
        return Certificate::empty(Verdict::CompletelyPositive);
    }
    if !scale.is_finite() {
        let mut cert = Certificate::empty(Verdict::Inconclusive);
        cert.message = Some("matrix has non-finite entries".to_string());
        return cert;
    }
    // Solving with a unit objective makes the relative gap, and so the
    // verdict, independent of the scale of `c`.
    let unit: Vec<f64> = objective.iter().map(|v| v / scale).collect();
    let result = match options.solver {
        SolverKind::Accp => {
            let config = AccpConfig {
                epsilon: options.epsilon,
                ..options.accp
            };
            accp_solve(&unit, copositive_oracle, 1.0, &config)
        }
        SolverKind::Ellipsoid => {
            let config = EllipsoidConfig {
                epsilon: options.epsilon,
                ..options.ellipsoid
            };
            ellipsoid_solve(&unit, copositive_oracle, 1.0, &config)
        }
    };
    match result {
        Ok(outcome) => classify(c, outcome, scale, options),
        Err(err) => inconclusive(err, scale),
    }
}

/// Separation oracle for the copositive cone in `vec` coordinates: `x` is
/// feasible iff `mat(x)` is copositive; otherwise the witness `y` gives the
/// halfspace `<y y^T, X> >= 0`, i.e. `-mat_adjoint(y y^T)^T x <= 0`.
///
/// # Panics
/// If `x.len()` is not a triangular number.
pub fn copositive_oracle(x: &[f64]) -> Result<OracleAnswer, MilpError> {
    let xm = mat(x).expect("query has triangular length");
    Ok(match test_copositive(&xm)? {
        OracleVerdict::Copositive => OracleAnswer::Feasible,
        OracleVerdict::Cut { y, .. } => {
            let a: Vec<f64> = mat_adjoint(&SymMatrix::outer(&y))
                .into_inner()
                .into_iter()
                .map(|v| -v)
                .collect();
            OracleAnswer::Halfspace { a, b: 0.0 }
        }
    })
}

fn classify(c: &SymMatrix, outcome: AccpOutcome, scale: f64, options: &CpOptions) -> Certificate {
    let best = mat(&outcome.x_best).expect("solution has triangular length");
    let objective = c.inner(&best);
    let mut cert = Certificate {
        verdict: Verdict::CompletelyPositive,
        cut_matrix: None,
        best_matrix: Some(best.clone()),
        objective,
        lower_bound: outcome.lower_bound * scale,
        near_boundary: false,
        trace: outcome.trace,
        message: None,
    };
    if outcome.objective < -options.cp_threshold {
        if verify_cut(c, &best) {
            cert.verdict = Verdict::NotCompletelyPositive;
            cert.cut_matrix = Some(best);
        } else {
            cert.verdict = Verdict::Inconclusive;
            cert.message = Some("best matrix failed re-verification as a cut".to_string());
        }
    } else if outcome.objective < -options.epsilon {
        cert.near_boundary = true;
    }
    cert
}

fn inconclusive(err: SolveError<MilpError>, scale: f64) -> Certificate {
    let mut cert = Certificate::empty(Verdict::Inconclusive);
    cert.message = Some(err.to_string());
    if let SolveError::IterationCap {
        best: Some((x, value)),
        ..
    } = &err
    {
        cert.best_matrix = mat(x).ok();
        cert.objective = value * scale;
        cert.lower_bound = f64::NEG_INFINITY;
    }
    if let Some(trace) = err.trace() {
        cert.trace = trace.clone();
    }
    cert
}

/// True iff `<c, x> < 0` and `x` passes the copositivity test, i.e. `x`
/// certifies that `c` is not completely positive.
pub fn verify_cut(c: &SymMatrix, x: &SymMatrix) -> bool {
    c.dim() == x.dim() && c.inner(x) < 0.0 && test_copositive(x).is_ok_and(|v| v.is_copositive())
}

/// `B B^T / |vec(B B^T)|` for a `d x k` matrix `B` of absolute standard
/// normal draws from a ChaCha8 stream seeded with `seed`.
pub fn make_random_cp(d: usize, k: usize, seed: u64) -> SymMatrix {
    assert!(d >= 1 && k >= 1, "dimensions must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b: Vec<Vec<f64>> = (0..d)
        .map(|_| {
            (0..k)
                .map(|_| {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    v.abs()
                })
                .collect()
        })
        .collect();
    let c = SymMatrix::from_fn(d, |i, j| b[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum());
    let n = vec(&c).norm();
    c.scaled(1.0 / n)
}
