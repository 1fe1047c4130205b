//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Every tolerance is pinned below. Run with
//! `cargo test -p cpa --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode, Output};
use std::time::Instant;

use cpa::format::to_dense;
use cpa_core::accp::{dikin_relevance, prune};
use cpa_core::copositivity::{
    brute_force_simplex_min, solve_model, BranchAndBound, CopositivityModel,
};
use cpa_core::linalg::Matrix;
use cpa_core::{
    analytic_center, completely_positive_cut_with, make_random_cp, test_copositive, verify_cut,
    ConvexBody, CpOptions, SolverKind, SymMatrix, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const ORACLE_OBJECTIVE_TOL: f64 = 1e-6;
const VERDICT_TOL: f64 = 1e-9;
const CENTER_GRAD_TOL: f64 = 1e-8;
const CENTER_MAX_ITERATIONS: usize = 50;
const CENTER_X_TOL: f64 = 1e-6;
const BODY_SLACK: f64 = 1e-8;
const DIKIN_SAMPLES: usize = 1_000;
const PRUNE_SAMPLES: usize = 10_000;
const CP_EPSILON: f64 = 1e-6;
const CP_OBJECTIVE_FLOOR: f64 = -1e-4;
const SOLVER_AGREEMENT: f64 = 1e-4;
const CALL_RATIO: f64 = 10.0;
const EXPONENT_RANGE: (f64, f64) = (1.0, 2.5);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quad(h: &Matrix, v: &[f64]) -> f64 {
    dot(&h.mul_vec(v), v)
}

fn cpa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpa"))
        .args(args)
        .env_remove("CPA_LOG")
        .output()
        .expect("cpa binary runs")
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst, mut disagreements) = (0.0f64, 0);
    for _ in 0..200 {
        let d = rng.random_range(2..=8);
        let x = SymMatrix::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let (exact, _) = brute_force_simplex_min(&x).unwrap();
        let model = CopositivityModel::new(x.clone());
        let milp = solve_model(&mut BranchAndBound::default(), &model, f64::INFINITY)
            .unwrap()
            .objective;
        worst = worst.max((milp - exact).abs());
        let expected = exact >= -VERDICT_TOL * x.max_abs();
        if test_copositive(&x).unwrap().is_copositive() != expected {
            disagreements += 1;
        }
    }
    outcome(
        worst <= ORACLE_OBJECTIVE_TOL && disagreements == 0,
        format!(
            "max |milp - enumeration| = {worst:.1e}, verdict disagreements = {disagreements}/200"
        ),
    )
}

fn newton_centering() -> Outcome {
    let mut symmetric = ConvexBody::ball(1, 1.0);
    symmetric.add_constraint(&[1.0], 0.5);
    symmetric.add_constraint(&[-1.0], 0.5);
    let mut half = ConvexBody::ball(1, 2.0);
    half.add_constraint(&[1.0], 0.0);
    let cases = [
        ("ball", ConvexBody::ball(3, 1.0), vec![0.0; 3]),
        ("symmetric interval", symmetric, vec![0.0]),
        ("{x^2 <= 4, x <= 0}", half, vec![-2.0 / 3f64.sqrt()]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, body, expected) in cases {
        let res = analytic_center(&body, &vec![0.0; body.dim()]);
        let err = res
            .x
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let ok = res.is_success()
            && res.grad_norm <= CENTER_GRAD_TOL
            && res.iterations <= CENTER_MAX_ITERATIONS
            && err <= CENTER_X_TOL;
        pass &= ok;
        parts.push(format!(
            "{name}: {} it, |x - x*| = {err:.1e}",
            res.iterations
        ));
    }
    outcome(pass, parts.join("; "))
}

/// Unit ball with `m <= 20` random normalized cuts at distance `[0.05, 1)`.
fn random_bodies() -> Vec<ConvexBody> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..50)
        .map(|_| {
            let n = rng.random_range(1..=6);
            let m = rng.random_range(1..=20);
            let mut body = ConvexBody::ball(n, 1.0);
            for _ in 0..m {
                let a: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let b = rng.random_range(0.05..1.0) * dot(&a, &a).sqrt();
                body.add_constraint(&a, b);
            }
            body
        })
        .collect()
}

fn sample_body(rng: &mut ChaCha8Rng, body: &ConvexBody) -> Vec<f64> {
    let n = body.dim();
    loop {
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if body.contains(&p, 0.0) {
            return p;
        }
    }
}

fn dikin_sandwich(bodies: &[ConvexBody]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut inner_bad, mut outer_bad, mut parameter_bad, mut failed) = (0, 0, 0, 0);
    let mut worst_ratio = 0.0f64;
    for body in bodies {
        let n = body.dim();
        let m = body.num_constraints();
        let center = analytic_center(body, &vec![0.0; n]);
        if !center.is_success() {
            failed += 1;
            continue;
        }
        let x = &center.x;
        let h = body.barrier_hessian(x).unwrap();
        for j in 0..n {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; n];
                e[j] = sign;
                let t = 1.0 / quad(&h, &e).sqrt();
                let p: Vec<f64> = x.iter().zip(&e).map(|(a, b)| a + t * b).collect();
                if !body.contains(&p, BODY_SLACK) {
                    inner_bad += 1;
                }
            }
        }
        let stated = ((m + 1) as f64).powi(2);
        let parameter = ((m + 2) as f64).powi(2);
        for _ in 0..DIKIN_SAMPLES {
            let p = sample_body(&mut rng, body);
            let d: Vec<f64> = p.iter().zip(x).map(|(a, b)| a - b).collect();
            let q = quad(&h, &d);
            worst_ratio = worst_ratio.max(q / stated);
            if q > stated + BODY_SLACK {
                outer_bad += 1;
            }
            if q > parameter + BODY_SLACK {
                parameter_bad += 1;
            }
        }
    }
    outcome(
        inner_bad == 0 && outer_bad == 0 && failed == 0,
        format!(
            "inner axis points outside Q: {inner_bad}; samples beyond (m+1)^2: {outer_bad} \
             (worst q/(m+1)^2 = {worst_ratio:.3}); beyond (m+2)^2: {parameter_bad}; centering failures: {failed}"
        ),
    )
}

/// Samples of `body` minus the constraints with `eta >= threshold(m)` that
/// violate one of the removed constraints.
fn pruning_violations(
    bodies: &[ConvexBody],
    rng: &mut ChaCha8Rng,
    mut pruned_body: impl FnMut(&ConvexBody, &[f64]) -> ConvexBody,
) -> (usize, usize) {
    let (mut removed_total, mut violations) = (0, 0);
    for body in bodies {
        let center = analytic_center(body, &vec![0.0; body.dim()]);
        if !center.is_success() {
            continue;
        }
        let pruned = pruned_body(body, &center.x);
        let removed: Vec<(Vec<f64>, f64)> = (0..body.num_constraints())
            .map(|i| body.constraint(i))
            .filter(|(a, b)| {
                !(0..pruned.num_constraints()).any(|k| pruned.constraint(k) == (*a, *b))
            })
            .map(|(a, b)| (a.to_vec(), b))
            .collect();
        removed_total += removed.len();
        if removed.is_empty() {
            continue;
        }
        for _ in 0..PRUNE_SAMPLES {
            let p = sample_body(rng, &pruned);
            if removed.iter().any(|(a, b)| dot(a, &p) > b + BODY_SLACK) {
                violations += 1;
            }
        }
    }
    (removed_total, violations)
}

fn pruning_safety(bodies: &[ConvexBody]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let literal = |body: &ConvexBody, x: &[f64]| {
        let mut out = body.clone();
        let m = body.num_constraints();
        if m > body.dim() {
            let eta = dikin_relevance(body, x).unwrap();
            out.retain(|i| eta[i] < (m + 1) as f64);
        }
        out
    };
    let (removed_literal, bad_literal) = pruning_violations(bodies, &mut rng, literal);
    let shipped = |body: &ConvexBody, x: &[f64]| {
        let mut out = body.clone();
        prune(&mut out, x, usize::MAX);
        out
    };
    let (removed_shipped, bad_shipped) = pruning_violations(bodies, &mut rng, shipped);
    outcome(
        bad_literal == 0,
        format!(
            "eta >= m+1 rule: {removed_literal} removed, {bad_literal} violating samples; \
             shipped prune (eta >= m+2): {removed_shipped} removed, {bad_shipped} violating samples"
        ),
    )
}

fn cp_options(solver: SolverKind) -> CpOptions {
    CpOptions {
        solver,
        epsilon: CP_EPSILON,
        ..CpOptions::default()
    }
}

fn cp_dichotomy() -> Outcome {
    let opts = cp_options(SolverKind::Accp);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut cp_ok, mut worst_objective, mut worst_gap) = (0, 0.0f64, 0.0f64);
    for i in 0..30 {
        let d = 2 + i % 7;
        let k = rng.random_range(1..=2 * d);
        let c = make_random_cp(d, k, 600 + i as u64);
        let cert = completely_positive_cut_with(&c, &opts);
        worst_objective = worst_objective.min(cert.objective);
        if let Some(gap) = cert.trace.gaps().last() {
            worst_gap = worst_gap.max(*gap);
        }
        if cert.verdict == Verdict::CompletelyPositive && cert.objective >= CP_OBJECTIVE_FLOOR {
            cp_ok += 1;
        }
    }
    let mut negatives = vec![SymMatrix::from_diag(&[1.0, -1.0])];
    for i in 0..10 {
        let d = 2 + i % 7;
        let mut c = make_random_cp(d, d, 700 + i as u64);
        let j = rng.random_range(0..d);
        c.set(j, j, -rng.random_range(0.01..1.0));
        negatives.push(c);
    }
    let mut not_cp_ok = 0;
    for c in &negatives {
        let cert = completely_positive_cut_with(c, &opts);
        let verified = cert.cut_matrix.as_ref().is_some_and(|x| verify_cut(c, x));
        if cert.verdict == Verdict::NotCompletelyPositive && verified {
            not_cp_ok += 1;
        }
    }
    outcome(
        cp_ok == 30 && not_cp_ok == negatives.len(),
        format!(
            "completely positive {cp_ok}/30 (min objective {worst_objective:.1e}, max final gap {worst_gap:.1e}); \
             verified cuts {not_cp_ok}/{}",
            negatives.len()
        ),
    )
}

/// Completely positive matrix with one off-diagonal entry made negative.
fn non_cp_instance(seed: u64) -> SymMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = make_random_cp(6, 6, seed);
    let i = rng.random_range(0..5);
    let j = rng.random_range(i + 1..6);
    c.set(i, j, -rng.random_range(0.05..0.3));
    c
}

fn accp_vs_ellipsoid() -> Outcome {
    let (accp, ell) = (
        cp_options(SolverKind::Accp),
        cp_options(SolverKind::Ellipsoid),
    );
    let mut pass = true;
    let mut parts = Vec::new();
    for seed in 800..805 {
        let c = non_cp_instance(seed);
        let a = completely_positive_cut_with(&c, &accp);
        let e = completely_positive_cut_with(&c, &ell);
        let rel = (a.objective - e.objective).abs() / a.objective.abs().max(e.objective.abs());
        let ratio = e.trace.oracle_calls as f64 / a.trace.oracle_calls as f64;
        pass &= a.verdict == e.verdict && rel <= SOLVER_AGREEMENT && ratio >= CALL_RATIO;
        parts.push(format!(
            "#{}: {} vs {} calls, rel diff {rel:.1e}",
            seed - 800,
            a.trace.oracle_calls,
            e.trace.oracle_calls
        ));
    }
    outcome(pass, parts.join("; "))
}

fn bench_instances(dir: &Path) {
    for d in [6usize, 8, 10] {
        for s in 0..3u64 {
            let x = make_random_cp(d, d, 1000 * d as u64 + s);
            fs::write(dir.join(format!("cp_d{d:02}_{s}.txt")), to_dense(&x)).unwrap();
        }
    }
}

fn scaling_harness(dir: &Path) -> Outcome {
    let json = dir.join("report.json");
    let start = Instant::now();
    let out = cpa(&[
        "bench",
        dir.join("inst").to_str().unwrap(),
        "--no-timing",
        "--json",
        json.to_str().unwrap(),
    ]);
    let secs = start.elapsed().as_secs_f64();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json).unwrap_or_default()).unwrap_or_default();
    let exponent = report["exponent"].as_f64();
    let rows = report["rows"].as_array().map_or(0, Vec::len);
    let calls: Vec<String> = report["rows"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|r| format!("d{}:{}", r["d"], r["oracle_calls"]))
        .collect();
    let pass = out.status.success()
        && rows == 9
        && exponent.is_some_and(|e| (EXPONENT_RANGE.0..=EXPONENT_RANGE.1).contains(&e));
    outcome(
        pass,
        format!(
            "exponent {} over {rows} instances in {secs:.0} s; calls {}",
            exponent.map_or("none".into(), |e| format!("{e:.2}")),
            calls.join(" ")
        ),
    )
}

fn determinism(dir: &Path) -> Outcome {
    let path = |name: &str| dir.join(name).to_str().unwrap().to_string();
    let same = |a: &Output, b: &Output| a.stdout == b.stdout && a.status.code() == b.status.code();
    let mut checks = Vec::new();

    let g1 = cpa(&[
        "generate",
        "--dim",
        "7",
        "--rank",
        "4",
        "--seed",
        "9",
        "--out",
        &path("g1.txt"),
    ]);
    let g2 = cpa(&[
        "generate",
        "--dim",
        "7",
        "--rank",
        "4",
        "--seed",
        "9",
        "--out",
        &path("g2.txt"),
    ]);
    checks.push((
        "generate",
        same(&g1, &g2) && fs::read(path("g1.txt")).ok() == fs::read(path("g2.txt")).ok(),
    ));

    fs::write(path("neg.txt"), to_dense(&non_cp_instance(900))).unwrap();
    let c1 = cpa(&["cp-cut", &path("neg.txt"), "--out", &path("c1.json")]);
    let c2 = cpa(&["cp-cut", &path("neg.txt"), "--out", &path("c2.json")]);
    checks.push((
        "cp-cut",
        same(&c1, &c2) && fs::read(path("c1.json")).ok() == fs::read(path("c2.json")).ok(),
    ));

    let k1 = cpa(&["check-copositive", &path("neg.txt")]);
    let k2 = cpa(&["check-copositive", &path("neg.txt")]);
    checks.push(("check-copositive", same(&k1, &k2)));

    let inst = path("inst");
    let b1 = cpa(&["bench", &inst, "--no-timing", "--json", &path("b1.json")]);
    let b2 = cpa(&["bench", &inst, "--no-timing", "--json", &path("b2.json")]);
    checks.push((
        "bench",
        same(&b1, &b2) && fs::read(path("b1.json")).ok() == fs::read(path("b2.json")).ok(),
    ));

    let pass = checks.iter().all(|(_, ok)| *ok);
    let detail = checks
        .iter()
        .map(|(name, ok)| format!("{name} {}", if *ok { "identical" } else { "DIFFERENT" }))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, detail)
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    fs::create_dir(dir.path().join("inst")).unwrap();
    bench_instances(&dir.path().join("inst"));
    let bodies = random_bodies();

    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("Newton centering", Box::new(newton_centering)),
        ("Dikin sandwich", Box::new(|| dikin_sandwich(&bodies))),
        ("pruning safety", Box::new(|| pruning_safety(&bodies))),
        ("CP dichotomy", Box::new(cp_dichotomy)),
        ("ACCP vs ellipsoid", Box::new(accp_vs_ellipsoid)),
        ("scaling harness", Box::new(|| scaling_harness(dir.path()))),
        ("determinism", Box::new(|| determinism(dir.path()))),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        if !result.pass {
            failures += 1;
        }
        println!(
            "criterion {} {name}: {} ({}; {:.1} s)",
            k + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
