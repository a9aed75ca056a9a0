//! `spars0 diagnose`: stationarity report at a user point.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use serde_json::json;

use spars0_core::io::{load_point, load_problem};
use spars0_core::problem::{default_zero_tol, y_star};
use spars0_core::stationarity::{
    as_trace, best_multiplier_residual, biactive_masked, check_sp_licq, check_sp_mfcq,
    check_sp_sosc, s_residual, Sosc,
};

use crate::{write_json, PenaltyFlags};

#[derive(Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    problem: PathBuf,
    /// Point JSON: {"x": [..], "y": [..]?, "lambda": [..]?, "mu": [..]?}.
    #[arg(long)]
    point: PathBuf,
    #[command(flatten)]
    penalty: PenaltyFlags,
    /// Zero tolerance; adaptive when omitted.
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: &DiagnoseArgs) -> Result<ExitCode, String> {
    let built = load_problem(&args.problem).map_err(|e| e.to_string())?;
    let problem = built.problem;
    let point = load_point(&args.point).map_err(|e| e.to_string())?;
    if point.x.len() != problem.n {
        return Err(format!(
            "point has dimension {}, problem has {}",
            point.x.len(),
            problem.n
        ));
    }
    let x = point.x.clone();
    let tau0 = args.tau0.unwrap_or_else(|| default_zero_tol(&x));

    // Multipliers: as supplied, otherwise the defect-minimizing ones.
    let best = best_multiplier_residual(&problem, &x, tau0);
    let lambda = point.lambda.clone().unwrap_or_else(|| best.lambda.clone());
    let mu = point.mu.clone().unwrap_or_else(|| best.mu.clone());
    if lambda.len() != problem.m() || mu.len() != problem.p() {
        return Err("multiplier dimensions do not match the constraint blocks".into());
    }
    let s_res = s_residual(&problem, &x, &lambda, &mu, tau0);

    let spec = args.penalty.to_spec(problem.rho, problem.num_masked())?;
    let y = match &point.y {
        Some(y) => {
            if y.len() != problem.num_masked() {
                return Err("y must live on the masked coordinates".into());
            }
            y.clone()
        }
        None => {
            let masked: Vec<f64> =
                problem.masked_indices().iter().map(|&i| x[i]).collect();
            y_star(&masked, &spec, tau0)
        }
    };

    let sosc = match check_sp_sosc(&problem, &x, &lambda, &mu, tau0) {
        Ok(Sosc::Holds) => "holds",
        Ok(Sosc::Fails) => "fails",
        Ok(Sosc::Inconclusive) | Err(_) => "inconclusive",
    };
    let mfcq = match check_sp_mfcq(&problem, &x, tau0) {
        Some(v) => json!(v),
        None => json!("indeterminate"),
    };
    let trace = as_trace(&problem, &[(x.clone(), lambda.clone(), mu.clone())], tau0, 1e-6);

    let value = json!({
        "s_residual": s_res,
        "best_multiplier_residual": best.residual,
        "biactive": biactive_masked(&problem, &x, &y, tau0),
        "sp_licq": check_sp_licq(&problem, &x, tau0),
        "sp_mfcq": mfcq,
        "sp_sosc": sosc,
        "as_trace": trace.residuals,
        "tau0": tau0,
    });
    write_json(&args.out, &value)?;
    Ok(ExitCode::SUCCESS)
}
