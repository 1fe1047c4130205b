//! `cpa`: copositivity tests and completely positive cuts from the shell.
//!
//! Exit codes:
//! - check-copositive: 0 copositive, 1 not copositive, 2 error
//! - cp-cut: 0 completely positive, 1 not completely positive,
//!   3 inconclusive, 2 error
//! - bench, generate: 0 success, 2 error

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cpa::bench::run_bench;
use cpa::format::{format_f64, read_matrix, to_dense};
use cpa::format::{serialize, Format};
use cpa::report::certificate_json;
use cpa_core::{
    completely_positive_cut_with, make_random_cp, test_copositive, CpOptions, OracleVerdict,
    SolverKind, Verdict,
};

#[derive(Parser)]
#[command(
    name = "cpa",
    version,
    about = "Copositivity tests and completely positive cuts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Accp,
    Ellipsoid,
}

impl From<Solver> for SolverKind {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Accp => SolverKind::Accp,
            Solver::Ellipsoid => SolverKind::Ellipsoid,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a matrix is copositive.
    CheckCopositive { file: PathBuf },
    /// Decide complete positivity; writes a certificate.
    CpCut {
        file: PathBuf,
        /// Relative-gap tolerance.
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        /// Certificate path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "accp")]
        solver: Solver,
    },
    /// Run every matrix file in a directory.
    Bench {
        instance_dir: PathBuf,
        #[arg(long, value_enum, default_value = "accp")]
        solver: Solver,
        /// CSV report path; stdout when absent.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// JSON report path.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Report 0 ms for every instance so reports are reproducible.
        #[arg(long)]
        no_timing: bool,
    },
    /// Write a random completely positive matrix.
    Generate {
        #[arg(long)]
        dim: usize,
        /// Number of nonnegative factors; defaults to `dim`.
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long)]
        seed: u64,
        /// Output path; stdout when absent. `.json` selects JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_logging() {
    env_logger::Builder::new()
        .parse_filters(&std::env::var("CPA_LOG").unwrap_or_else(|_| "warn".into()))
        .format_timestamp(None)
        .init();
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_copositive(file: &Path) -> Result<u8, String> {
    let x = read_matrix(file).map_err(|e| format!("{}: {e}", file.display()))?;
    match test_copositive(&x).map_err(|e| e.to_string())? {
        OracleVerdict::Copositive => {
            println!("copositive");
            Ok(0)
        }
        OracleVerdict::Cut { y, value } => {
            let y: Vec<String> = y.iter().map(|v| format_f64(*v)).collect();
            println!("not copositive");
            println!("y = {}", y.join(" "));
            println!("value = {}", format_f64(value));
            Ok(1)
        }
    }
}

fn cp_cut(file: &Path, epsilon: f64, out: Option<&Path>, solver: Solver) -> Result<u8, String> {
    if !(epsilon > 0.0) {
        return Err("--epsilon must be positive".into());
    }
    let x = read_matrix(file).map_err(|e| format!("{}: {e}", file.display()))?;
    let options = CpOptions {
        solver: solver.into(),
        epsilon,
        ..CpOptions::default()
    };
    let cert = completely_positive_cut_with(&x, &options);
    let json = certificate_json(&cert, options.solver, epsilon);
    write_or_print(out, &json)?;
    if out.is_some() {
        println!("{}", cert.verdict.as_str());
    }
    if let Some(msg) = &cert.message {
        eprintln!("{msg}");
    }
    Ok(match cert.verdict {
        Verdict::CompletelyPositive => 0,
        Verdict::NotCompletelyPositive => 1,
        Verdict::Inconclusive => 3,
    })
}

fn bench(
    dir: &Path,
    solver: Solver,
    csv: Option<&Path>,
    json: Option<&Path>,
    no_timing: bool,
) -> Result<u8, String> {
    let options = CpOptions {
        solver: solver.into(),
        ..CpOptions::default()
    };
    let report =
        run_bench(dir, &options, !no_timing).map_err(|e| format!("{}: {e}", dir.display()))?;
    write_or_print(csv, &report.to_csv())?;
    if let Some(path) = json {
        write_or_print(Some(path), &report.to_json(&options))?;
    }
    match report.exponent {
        Some(e) => eprintln!("oracle calls grow like d^{}", format_f64(e)),
        None => eprintln!("growth exponent needs at least two dimensions"),
    }
    Ok(0)
}

fn generate(dim: usize, rank: Option<usize>, seed: u64, out: Option<&Path>) -> Result<u8, String> {
    let rank = rank.unwrap_or(dim);
    if dim == 0 || rank == 0 {
        return Err("--dim and --rank must be at least 1".into());
    }
    let x = make_random_cp(dim, rank, seed);
    let text = match out {
        Some(p) => serialize(&x, Format::from_path(p)),
        None => to_dense(&x),
    };
    write_or_print(out, &text)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    init_logging();
    let result = match &cli.command {
        Command::CheckCopositive { file } => check_copositive(file),
        Command::CpCut {
            file,
            epsilon,
            out,
            solver,
        } => cp_cut(file, *epsilon, out.as_deref(), *solver),
        Command::Bench {
            instance_dir,
            solver,
            csv,
            json,
            no_timing,
        } => bench(
            instance_dir,
            *solver,
            csv.as_deref(),
            json.as_deref(),
            *no_timing,
        ),
        Command::Generate {
            dim,
            rank,
            seed,
            out,
        } => generate(*dim, *rank, *seed, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
