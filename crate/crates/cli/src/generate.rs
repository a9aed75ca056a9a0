//! `spars0 generate`: seeded instance files for the benchmark families.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use serde_json::json;

use spars0_core::apps::{
    gen_basis_pursuit, gen_blobs, gen_dictionary, gen_portfolio, EntryDistribution,
};
use spars0_core::io::matrix_to_rows;

use crate::write_json;

#[derive(Args)]
pub struct GenerateArgs {
    /// portfolio | basis_pursuit | dictionary | logistic_synth | svm_synth
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    rho: Option<f64>,
    /// Problem JSON destination (stdout otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dataset destination for the classification families.
    #[arg(long)]
    data_out: Option<PathBuf>,
}

fn dataset_to_libsvm(data: &spars0_core::apps::ClassificationDataset) -> String {
    let mut text = String::new();
    for (sample, label) in data.samples.iter().zip(&data.labels) {
        let mut line = String::from(if *label > 0.0 { "+1" } else { "-1" });
        for (j, v) in sample.iter().enumerate() {
            if *v != 0.0 {
                line.push_str(&format!(" {}:{}", j + 1, v));
            }
        }
        text.push_str(&line);
        text.push('\n');
    }
    text
}

pub fn run(args: &GenerateArgs) -> Result<ExitCode, String> {
    let value = match args.family.as_str() {
        "portfolio" => {
            let rho = args.rho.unwrap_or(1.0);
            let inst = gen_portfolio(args.n, args.seed, rho, 0.95);
            json!({
                "name": format!("portfolio-n{}-s{}", args.n, args.seed),
                "rho": rho,
                "family": "portfolio",
                "Q": matrix_to_rows(&inst.q),
                "mean": inst.mean_returns,
                "s": inst.min_return,
                "u": inst.upper,
                "recommended_alpha0": inst.alpha0,
                "lambda_min": inst.lambda_min,
            })
        }
        "basis_pursuit" => {
            let inst = gen_basis_pursuit(
                32,
                args.n.max(32),
                4,
                0.1,
                0.1,
                args.seed,
                EntryDistribution::Uniform01,
            );
            json!({
                "name": format!("basis-pursuit-s{}", args.seed),
                "rho": args.rho.unwrap_or(1.0),
                "family": "basis_pursuit",
                "A": matrix_to_rows(&inst.a),
                "b": inst.b,
                "eps": inst.eps_ball,
                "true_signal": inst.true_signal,
            })
        }
        "dictionary" => {
            let rho = args.rho.unwrap_or(0.1);
            let inst = gen_dictionary(10, 20, 30, 3, rho, args.seed);
            json!({
                "name": format!("dictionary-s{}", args.seed),
                "rho": rho,
                "family": "dictionary",
                "Z": matrix_to_rows(&inst.z),
                "l": inst.l,
            })
        }
        "logistic_synth" | "svm_synth" => {
            let is_logistic = args.family.as_str() == "logistic_synth";
            let (m, nf, sep) = if is_logistic { (40, args.n.min(10), 3.0) } else { (20, args.n.min(6), 2.5) };
            let data = gen_blobs(m, nf.max(2), args.seed, sep);
            let data_path = match &args.data_out {
                Some(p) => p.clone(),
                None => match &args.out {
                    Some(out) => out.with_extension("libsvm"),
                    None => return Err("classification families need --data-out or --out".into()),
                },
            };
            std::fs::write(&data_path, dataset_to_libsvm(&data)).map_err(|e| e.to_string())?;
            let rel = match (&args.out, data_path.file_name()) {
                (Some(_), Some(name)) => name.to_string_lossy().to_string(),
                _ => data_path.to_string_lossy().to_string(),
            };
            if is_logistic {
                json!({
                    "name": format!("logistic-s{}", args.seed),
                    "rho": args.rho.unwrap_or(0.1 / m as f64),
                    "family": "logistic",
                    "libsvm_path": rel,
                    "r": 100.0,
                    "rho_scale": 0.1,
                })
            } else {
                json!({
                    "name": format!("svm-s{}", args.seed),
                    "rho": args.rho.unwrap_or(1.0 / m as f64),
                    "family": "svm",
                    "libsvm_path": rel,
                    "rho_scale": 1.0,
                })
            }
        }
        other => return Err(format!("unknown family '{other}'")),
    };
    write_json(&args.out, &value)?;
    Ok(ExitCode::SUCCESS)
}
