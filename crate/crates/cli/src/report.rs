//! Certificate and benchmark serialization.

use cpa_core::{Certificate, SolverKind};
use serde_json::{json, Value};

use crate::format::to_dense;

pub fn solver_name(kind: SolverKind) -> &'static str {
    match kind {
        SolverKind::Accp => "accp",
        SolverKind::Ellipsoid => "ellipsoid",
    }
}

/// JSON for a finite float; infinities and NaN become `null`.
fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

/// Certificate JSON. The cut matrix is embedded as dense text at full
/// precision so that `verify_cut` can be rerun without the solver. Gaps
/// before the first feasible point are infinite and written as `null`.
pub fn certificate_json(cert: &Certificate, solver: SolverKind, epsilon: f64) -> String {
    let v = json!({
        "verdict": cert.verdict.as_str(),
        "solver": solver_name(solver),
        "epsilon": number(epsilon),
        "objective": number(cert.objective),
        "lower_bound": number(cert.lower_bound),
        "near_boundary": cert.near_boundary,
        "oracle_calls": cert.trace.oracle_calls,
        "feasible_hits": cert.trace.feasible_hits,
        "cut_matrix": cert.cut_matrix.as_ref().map(to_dense),
        "gap_trace": cert.trace.gaps().into_iter().map(number).collect::<Vec<_>>(),
        "message": cert.message,
    });
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
    s.push('\n');
    s
}
