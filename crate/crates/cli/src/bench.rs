//! Batch runs over a directory of matrix files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cpa_core::{completely_positive_cut_with, CpOptions, Verdict};
use log::{info, warn};
use rayon::prelude::*;
use serde_json::json;

use crate::format::{format_f64, read_matrix};
use crate::report::solver_name;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub name: String,
    /// 0 when the file could not be read.
    pub d: usize,
    pub objective: f64,
    pub oracle_calls: usize,
    pub millis: u128,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of `ln(oracle_calls)` against `ln(d)`.
    pub exponent: Option<f64>,
}

pub const CSV_HEADER: &str = "name,d,objective,oracle_calls,millis,verdict";

fn instance_files(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn run_one(path: &Path, options: &CpOptions, timing: bool) -> BenchRow {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let x = match read_matrix(path) {
        Ok(x) => x,
        Err(e) => {
            warn!("{name}: {e}");
            return BenchRow {
                name,
                d: 0,
                objective: f64::NAN,
                oracle_calls: 0,
                millis: 0,
                verdict: Verdict::Inconclusive,
            };
        }
    };
    let start = Instant::now();
    let cert = completely_positive_cut_with(&x, options);
    let millis = if timing {
        start.elapsed().as_millis()
    } else {
        0
    };
    info!(
        "{name}: d={} {} calls={} in {millis} ms",
        x.dim(),
        cert.verdict.as_str(),
        cert.trace.oracle_calls
    );
    BenchRow {
        name,
        d: x.dim(),
        objective: cert.objective,
        oracle_calls: cert.trace.oracle_calls,
        millis,
        verdict: cert.verdict,
    }
}

/// Runs every file in `dir` (not recursively). Instances run in parallel;
/// rows come back sorted by `(d, name)` whatever the scheduling.
pub fn run_bench(dir: &Path, options: &CpOptions, timing: bool) -> io::Result<BenchReport> {
    let files = instance_files(dir)?;
    let mut rows: Vec<BenchRow> = files
        .par_iter()
        .map(|p| run_one(p, options, timing))
        .collect();
    rows.sort_by(|a, b| a.d.cmp(&b.d).then_with(|| a.name.cmp(&b.name)));
    let exponent = growth_exponent(&rows);
    Ok(BenchReport { rows, exponent })
}

/// Slope of the log-log least-squares line through `(d, oracle_calls)`
/// over conclusive rows. `None` with fewer than two distinct `d`.
pub fn growth_exponent(rows: &[BenchRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.verdict != Verdict::Inconclusive && r.d > 0 && r.oracle_calls > 0)
        .map(|r| ((r.d as f64).ln(), (r.oracle_calls as f64).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 1e-12).then(|| sxy / sxx)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let objective = if r.objective.is_finite() {
                format_f64(r.objective)
            } else {
                String::new()
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_field(&r.name),
                r.d,
                objective,
                r.oracle_calls,
                r.millis,
                r.verdict.as_str()
            ));
        }
        out
    }

    pub fn to_json(&self, options: &CpOptions) -> String {
        let rows: Vec<_> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "name": r.name,
                    "d": r.d,
                    "objective": serde_json::Number::from_f64(r.objective),
                    "oracle_calls": r.oracle_calls,
                    "millis": r.millis as u64,
                    "verdict": r.verdict.as_str(),
                })
            })
            .collect();
        let v = json!({
            "solver": solver_name(options.solver),
            "epsilon": options.epsilon,
            "exponent": self.exponent,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
        s.push('\n');
        s
    }
}
