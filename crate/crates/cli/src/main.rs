//! `spars0` command line: solve, oracle, diagnose, generate, bench.
//!
//! Exit codes: 0 on a step-3 termination (or command success), 2 when
//! the outer loop hits its iteration cap, 3 on inner-solver failure,
//! 1 on input or configuration errors.

mod bench;
mod diagnose;
mod generate;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use spars0_core::io::{load_point, load_problem, BuiltProblem};
use spars0_core::penalty::{PenaltyKind, PenaltySpec};
use spars0_core::problem::SparseProblem;
use spars0_core::{
    enumerate_supports, solve, EpsSchedule, OuterConfig, SolveReport, Termination,
};

#[derive(Parser)]
#[command(name = "spars0", version, about = "Exact penalty solver for l0-penalized programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the exact penalty method on a problem file.
    Solve(SolveArgs),
    /// Certify the global value by support enumeration.
    Oracle(OracleArgs),
    /// Stationarity diagnostics at a given point.
    Diagnose(diagnose::DiagnoseArgs),
    /// Generate a seeded benchmark instance file.
    Generate(generate::GenerateArgs),
    /// Run a benchmark suite and write a summary.
    Bench(bench::BenchArgs),
}

#[derive(Args, Clone)]
pub struct PenaltyFlags {
    /// Penalty member: quadratic | natural | huber.
    #[arg(long, default_value = "natural")]
    penalty: String,
    /// Sparsity weight; defaults to the problem file's rho.
    #[arg(long)]
    rho: Option<f64>,
    /// Huber half-width (required for --penalty huber).
    #[arg(long)]
    huber_eps: Option<f64>,
}

impl PenaltyFlags {
    pub fn to_spec(&self, fallback_rho: f64, n: usize) -> Result<PenaltySpec, String> {
        let kind = match self.penalty.as_str() {
            "quadratic" => PenaltyKind::QuadraticShifted,
            "natural" => PenaltyKind::NaturalQuadratic,
            "huber" => PenaltyKind::HuberShifted,
            other => return Err(format!("unknown penalty kind '{other}'")),
        };
        if kind == PenaltyKind::HuberShifted && self.huber_eps.is_none() {
            return Err("--penalty huber requires --huber-eps".into());
        }
        PenaltySpec::new(kind, self.rho.unwrap_or(fallback_rho), self.huber_eps, n)
            .map_err(|e| e.to_string())
    }
}

#[derive(Args, Clone)]
pub struct OuterFlags {
    #[arg(long, default_value_t = 1.0)]
    alpha0: f64,
    #[arg(long, default_value_t = 1.1)]
    beta: f64,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long, default_value_t = 1e-2)]
    eps0: f64,
    #[arg(long, default_value_t = 0.5)]
    eps_factor: f64,
    #[arg(long, default_value_t = 1e-8)]
    eps_min: f64,
    /// Switches to the coupled schedule eps_k = c / (alpha_k (k+1)).
    #[arg(long)]
    eps_coupled_c: Option<f64>,
    #[arg(long, default_value_t = 200)]
    max_outer: usize,
    /// Use the multiplier-free projection tests in step 2.
    #[arg(long, default_value_t = false)]
    multiplier_free: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl OuterFlags {
    pub fn to_config(&self) -> OuterConfig {
        OuterConfig {
            alpha0: self.alpha0,
            beta: self.beta,
            delta: self.delta,
            eps: match self.eps_coupled_c {
                Some(c) => EpsSchedule::Coupled { c },
                None => EpsSchedule::Geometric {
                    eps0: self.eps0,
                    factor: self.eps_factor,
                    eps_min: self.eps_min,
                },
            },
            max_outer: self.max_outer,
            multiplier_free: self.multiplier_free,
            seed: self.seed,
            zero_tol: None,
            alm: Default::default(),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Problem JSON file.
    #[arg(long)]
    problem: PathBuf,
    #[command(flatten)]
    penalty: PenaltyFlags,
    #[command(flatten)]
    outer: OuterFlags,
    /// Optional start point JSON ({"x": [..], "y": [..]?}).
    #[arg(long)]
    start: Option<PathBuf>,
    /// Output file for the solve report (stdout otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (unused by solve, accepted for symmetry).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    problem: PathBuf,
    /// Refuse enumeration beyond this many masked coordinates.
    #[arg(long, default_value_t = 14)]
    max_n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional CSV with the full per-support table.
    #[arg(long)]
    csv: Option<PathBuf>,
}

pub fn write_json(out: &Option<PathBuf>, value: &serde_json::Value) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| e.to_string()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Dictionary problems are S-stationary at the origin, so their useful
/// default start is a projected random point; everything else starts at
/// the projected origin inside `solve`.
pub fn default_start(
    problem: &Arc<SparseProblem>,
    penalty: &PenaltySpec,
    seed: u64,
) -> Option<(Vec<f64>, Vec<f64>)> {
    if problem.proj.is_some() {
        Some(spars0_core::apps::dictionary_start(
            problem,
            penalty.minimizer_point(),
            seed,
        ))
    } else {
        None
    }
}

pub fn run_solve_on(
    built: &BuiltProblem,
    penalty: &PenaltyFlags,
    outer: &OuterFlags,
    start: Option<(Vec<f64>, Vec<f64>)>,
) -> Result<SolveReport, String> {
    let problem = Arc::new(built.problem.clone());
    let spec = penalty.to_spec(problem.rho, problem.num_masked())?;
    let cfg = outer.to_config();
    let start = start.or_else(|| default_start(&problem, &spec, cfg.seed));
    let start_refs = start.as_ref().map(|(x, y)| (x.as_slice(), y.as_slice()));
    solve(problem, &spec, &cfg, start_refs).map_err(|e| e.to_string())
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode, String> {
    let built = load_problem(&args.problem).map_err(|e| e.to_string())?;
    let start = match &args.start {
        Some(path) => {
            let point = load_point(path).map_err(|e| e.to_string())?;
            if point.x.len() != built.problem.n {
                return Err(format!(
                    "start point has dimension {}, problem has {}",
                    point.x.len(),
                    built.problem.n
                ));
            }
            let spec = args
                .penalty
                .to_spec(built.problem.rho, built.problem.num_masked())?;
            let y = point
                .y
                .unwrap_or_else(|| vec![spec.minimizer_point(); built.problem.num_masked()]);
            Some((point.x, y))
        }
        None => None,
    };
    let report = run_solve_on(&built, &args.penalty, &args.outer, start)?;
    let value = serde_json::to_value(&report).map_err(|e| e.to_string())?;
    write_json(&args.out, &value)?;
    Ok(match report.termination {
        Termination::Step3 => ExitCode::SUCCESS,
        Termination::MaxOuter => ExitCode::from(2),
        Termination::InnerFailure => ExitCode::from(3),
    })
}

fn cmd_oracle(args: &OracleArgs) -> Result<ExitCode, String> {
    let built = load_problem(&args.problem).map_err(|e| e.to_string())?;
    let result = enumerate_supports(&built.problem, args.max_n).map_err(|e| e.to_string())?;
    if let Some(csv_path) = &args.csv {
        let mut text = String::from("support,feasible,value\n");
        for entry in &result.table {
            let support = entry
                .support
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            let value = entry.value.map_or(String::new(), |v| format!("{v}"));
            text.push_str(&format!("\"{}\",{},{}\n", support, entry.feasible, value));
        }
        std::fs::write(csv_path, text).map_err(|e| e.to_string())?;
    }
    let mut value = serde_json::to_value(&result).map_err(|e| e.to_string())?;
    // The full table can be large; keep the JSON output to the verdict.
    value.as_object_mut().unwrap().remove("table");
    write_json(&args.out, &value)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Solve(args) => cmd_solve(args),
        Cmd::Oracle(args) => cmd_oracle(args),
        Cmd::Diagnose(args) => diagnose::run(args),
        Cmd::Generate(args) => generate::run(args),
        Cmd::Bench(args) => bench::run(args),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
