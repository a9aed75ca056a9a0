//! `spars0 bench`: seeded suite runner with a worker pool and CSV/JSON
//! summaries. Rows are sorted by instance name before writing, so the
//! output does not depend on scheduling.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::Args;
use serde::Serialize;
use serde_json::json;

use spars0_core::apps::{
    build_basis_pursuit, build_dictionary, build_logistic, build_portfolio, build_svm,
    dictionary_start, gen_basis_pursuit, gen_blobs, gen_dictionary, gen_portfolio,
    EntryDistribution,
};
use spars0_core::problem::SparseProblem;
use spars0_core::{
    enumerate_supports, solve, EpsSchedule, OuterConfig, PenaltySpec, Termination,
};

#[derive(Args)]
pub struct BenchArgs {
    /// portfolio | basis_pursuit | dictionary | logistic_synth | svm_synth
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; falls back to SPARS0_THREADS, then the core count.
    #[arg(long)]
    threads: Option<usize>,
    /// Certify against the support-enumeration oracle where the masked
    /// block is small enough.
    #[arg(long, default_value_t = false)]
    oracle: bool,
    /// Portfolio dimension.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Output prefix; writes <prefix>.csv and <prefix>.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct BenchRow {
    name: String,
    n: usize,
    status: String,
    l0_objective: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matches_oracle: Option<bool>,
    x_l0: usize,
    comp: f64,
    wall_time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn status_str(t: Termination) -> String {
    match t {
        Termination::Step3 => "step3".into(),
        Termination::MaxOuter => "max_outer".into(),
        Termination::InnerFailure => "inner_failure".into(),
    }
}

fn geometric() -> EpsSchedule {
    EpsSchedule::Geometric { eps0: 1e-2, factor: 0.5, eps_min: 1e-8 }
}

struct Prepared {
    name: String,
    problem: std::sync::Arc<SparseProblem>,
    penalty: PenaltySpec,
    cfg: OuterConfig,
    start: Option<(Vec<f64>, Vec<f64>)>,
}

fn prepare(suite: &str, index: usize, base_seed: u64, n: usize) -> Result<Prepared, String> {
    let seed = base_seed.wrapping_add(index as u64);
    match suite {
        "portfolio" => {
            let inst = gen_portfolio(n, seed, 1.0, 0.95);
            let problem = std::sync::Arc::new(build_portfolio(&inst).map_err(|e| e.to_string())?);
            let cfg = OuterConfig {
                alpha0: inst.alpha0,
                beta: 1.1,
                eps: geometric(),
                seed,
                ..OuterConfig::default()
            };
            Ok(Prepared {
                name: format!("portfolio-n{n}-s{seed:04}"),
                penalty: PenaltySpec::natural(1.0, problem.num_masked()),
                problem,
                cfg,
                start: None,
            })
        }
        "basis_pursuit" => {
            let inst =
                gen_basis_pursuit(32, 128, 4, 0.1, 0.1, seed, EntryDistribution::Uniform01);
            let problem =
                std::sync::Arc::new(build_basis_pursuit(&inst).map_err(|e| e.to_string())?);
            let cfg = OuterConfig {
                alpha0: 1.0,
                beta: 1.1,
                eps: geometric(),
                seed,
                ..OuterConfig::default()
            };
            let start = Some((vec![0.0; 128], vec![1.0; 128]));
            Ok(Prepared {
                name: format!("basis-pursuit-s{seed:04}"),
                penalty: PenaltySpec::natural(1.0, problem.num_masked()),
                problem,
                cfg,
                start,
            })
        }
        "dictionary" => {
            let inst = gen_dictionary(10, 20, 30, 3, 0.1, seed);
            let problem =
                std::sync::Arc::new(build_dictionary(&inst).map_err(|e| e.to_string())?);
            let penalty = PenaltySpec::natural(0.1, problem.num_masked());
            let start = Some(dictionary_start(&problem, penalty.minimizer_point(), seed));
            let cfg = OuterConfig {
                alpha0: 0.1,
                beta: 10.0,
                eps: geometric(),
                seed,
                ..OuterConfig::default()
            };
            Ok(Prepared {
                name: format!("dictionary-s{seed:04}"),
                penalty,
                problem,
                cfg,
                start,
            })
        }
        "logistic_synth" => {
            let data = gen_blobs(40, 10, seed, 3.0);
            let (p, _) = build_logistic(&data, 0.1 / 40.0, 100.0).map_err(|e| e.to_string())?;
            let problem = std::sync::Arc::new(p);
            let cfg = OuterConfig {
                alpha0: 0.1,
                beta: 10.0,
                eps: geometric(),
                seed,
                ..OuterConfig::default()
            };
            Ok(Prepared {
                name: format!("logistic-s{seed:04}"),
                penalty: PenaltySpec::natural(0.1 / 40.0, problem.num_masked()),
                problem,
                cfg,
                start: None,
            })
        }
        "svm_synth" => {
            let m = 20usize;
            let data = gen_blobs(m, 5, seed, 2.5);
            let (p, _) = build_svm(&data, 1.0 / m as f64).map_err(|e| e.to_string())?;
            let problem = std::sync::Arc::new(p);
            let cfg = OuterConfig {
                alpha0: 1.0 / m as f64,
                beta: 10.0,
                eps: geometric(),
                seed,
                ..OuterConfig::default()
            };
            Ok(Prepared {
                name: format!("svm-s{seed:04}"),
                penalty: PenaltySpec::natural(1.0 / m as f64, problem.num_masked()),
                problem,
                cfg,
                start: None,
            })
        }
        other => Err(format!("unknown suite '{other}'")),
    }
}

fn run_instance(suite: &str, index: usize, base_seed: u64, n: usize, with_oracle: bool) -> BenchRow {
    let prepared = match prepare(suite, index, base_seed, n) {
        Ok(p) => p,
        Err(e) => {
            return BenchRow {
                name: format!("{suite}-{index:04}"),
                n: 0,
                status: "error".into(),
                l0_objective: f64::NAN,
                oracle_value: None,
                matches_oracle: None,
                x_l0: 0,
                comp: f64::NAN,
                wall_time_ms: 0.0,
                error: Some(e),
            }
        }
    };
    let clock = Instant::now();
    let start_refs = prepared
        .start
        .as_ref()
        .map(|(x, y)| (x.as_slice(), y.as_slice()));
    let solved = solve(
        std::sync::Arc::clone(&prepared.problem),
        &prepared.penalty,
        &prepared.cfg,
        start_refs,
    );
    let wall = clock.elapsed().as_secs_f64() * 1e3;
    match solved {
        Ok(report) => {
            let (oracle_value, matches_oracle) = if with_oracle
                && prepared.problem.num_masked() <= 14
            {
                match enumerate_supports(&prepared.problem, 14) {
                    Ok(oracle) => {
                        let tol = 1e-4 * (1.0 + oracle.best_value.abs());
                        (
                            Some(oracle.best_value),
                            Some((report.l0_objective - oracle.best_value).abs() <= tol),
                        )
                    }
                    Err(_) => (None, None),
                }
            } else {
                (None, None)
            };
            BenchRow {
                name: prepared.name,
                n: prepared.problem.n,
                status: status_str(report.termination),
                l0_objective: report.l0_objective,
                oracle_value,
                matches_oracle,
                x_l0: report.support.len(),
                comp: report.comp,
                wall_time_ms: wall,
                error: None,
            }
        }
        Err(e) => BenchRow {
            name: prepared.name,
            n: prepared.problem.n,
            status: "error".into(),
            l0_objective: f64::NAN,
            oracle_value: None,
            matches_oracle: None,
            x_l0: 0,
            comp: f64::NAN,
            wall_time_ms: wall,
            error: Some(e.to_string()),
        },
    }
}

pub fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("SPARS0_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |v| v.get()))
    .max(1)
}

pub fn run(args: &BenchArgs) -> Result<ExitCode, String> {
    let workers = resolve_threads(args.threads).min(args.count.max(1));
    let next = AtomicUsize::new(0);
    let rows = Mutex::new(Vec::with_capacity(args.count));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= args.count {
                    break;
                }
                let row = run_instance(&args.suite, i, args.seed, args.n, args.oracle);
                rows.lock().unwrap().push(row);
            });
        }
    });
    let mut rows = rows.into_inner().unwrap();
    rows.sort_by(|a, b| a.name.cmp(&b.name));

    let oracle_rows = rows.iter().filter(|r| r.oracle_value.is_some()).count();
    let matched = rows
        .iter()
        .filter(|r| r.matches_oracle == Some(true))
        .count();
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let mean_time =
        rows.iter().map(|r| r.wall_time_ms).sum::<f64>() / rows.len().max(1) as f64;
    let summary = json!({
        "suite": args.suite,
        "count": args.count,
        "seed": args.seed,
        "rows": rows,
        "match_rate": if oracle_rows > 0 { Some(matched as f64 / oracle_rows as f64) } else { None },
        "mean_time_ms": mean_time,
        "failures": failed,
    });

    if let Some(prefix) = &args.out {
        let json_path = prefix.with_extension("json");
        std::fs::write(
            &json_path,
            serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        let csv_path = prefix.with_extension("csv");
        let mut text =
            String::from("name,n,status,l0_objective,oracle_value,match,x_l0,comp,wall_time_ms\n");
        for r in &rows {
            text.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.name,
                r.n,
                r.status,
                r.l0_objective,
                r.oracle_value.map_or(String::new(), |v| v.to_string()),
                r.matches_oracle.map_or(String::new(), |v| v.to_string()),
                r.x_l0,
                r.comp,
                r.wall_time_ms
            ));
        }
        std::fs::write(&csv_path, text).map_err(|e| e.to_string())?;
    } else {
        println!("{}", serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?);
    }

    if failed == rows.len() && !rows.is_empty() {
        return Err("every instance failed".into());
    }
    Ok(ExitCode::SUCCESS)
}
