//! Copositive optimization by an analytic center cutting plane method.
//!
//! The crate decides whether a symmetric matrix `C` is completely positive
//! by minimizing `<C, X>` over copositive matrices `X` in the unit ball of
//! `vec(X)`. Membership of the copositive cone is tested by a mixed-integer
//! linear program solved with an in-house branch and bound, and the outer
//! approximation is centered with an infeasible-start Newton method.
//!
//! Everything here is `no_std` and only needs an allocator. File formats,
//! the command line front end and the benchmark harness live in the `cpa`
//! crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod accp;
pub mod center;
pub mod copositivity;
pub mod cp;
pub mod ellipsoid;
pub mod linalg;
pub mod lp;

mod math {
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }

    #[inline]
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }
}

pub use accp::{
    accp_solve, accp_solve_observed, AccpConfig, AccpOutcome, OracleAnswer, SolveError, SolveTrace,
};
pub use center::{analytic_center, lower_bound, CenterResult, CenterStatus, ConvexBody};
pub use copositivity::{test_copositive, OracleVerdict};
pub use cp::{
    completely_positive_cut, completely_positive_cut_with, copositive_oracle, make_random_cp,
    verify_cut, Certificate, CpOptions, SolverKind, Verdict,
};
pub use linalg::{mat, mat_adjoint, vec, SymMatrix, SymVec};
