//! JSON wire formats: problem descriptions, points, and penalty
//! selection. Family payloads are flat next to the common fields, keyed
//! by `"family"`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apps;
use crate::apps::{ClassificationDataset, LibsvmError};
use crate::penalty::{PenaltyError, PenaltyKind, PenaltySpec};
use crate::problem::{ProblemError, SparseProblem};
use crate::split::SplitMap;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error(transparent)]
    Libsvm(#[from] LibsvmError),
    #[error("{0}")]
    Invalid(String),
}

/// Penalty selection as it appears inside configs:
/// `{"kind": "quadratic"|"natural"|"huber", "rho": .., "huber_eps": ..?}`.
/// A missing `rho` falls back to the problem's.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PenaltyChoice {
    pub kind: PenaltyKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub huber_eps: Option<f64>,
}

impl PenaltyChoice {
    pub fn to_spec(&self, fallback_rho: f64, n: usize) -> Result<PenaltySpec, PenaltyError> {
        PenaltySpec::new(self.kind, self.rho.unwrap_or(fallback_rho), self.huber_eps, n)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointJson {
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyJson {
    Portfolio {
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
        mean: Vec<f64>,
        s: f64,
        u: Vec<f64>,
    },
    BasisPursuit {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        eps: f64,
    },
    Logistic {
        libsvm_path: String,
        r: f64,
        rho_scale: f64,
    },
    Svm {
        libsvm_path: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho_scale: Option<f64>,
    },
    Dictionary {
        #[serde(rename = "Z")]
        z: Vec<Vec<f64>>,
        l: usize,
    },
    SeparableQuadratic {
        target: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    LinearBall,
    EqualityBall,
    NegLinear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemJson {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub n: Option<usize>,
    pub rho: f64,
    #[serde(default)]
    pub upper_bounds: Option<Vec<f64>>,
    #[serde(flatten)]
    pub family: FamilyJson,
}

/// A problem built from JSON, with split bookkeeping when the family
/// introduces sign-split variables.
pub struct BuiltProblem {
    pub problem: SparseProblem,
    pub split: Option<SplitMap>,
}

fn to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, IoError> {
    if rows.is_empty() {
        return Err(IoError::Invalid(format!("{what}: empty matrix")));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(IoError::Invalid(format!("{what}: ragged rows")));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
}

fn load_dataset(base: &Path, rel: &str) -> Result<ClassificationDataset, IoError> {
    let path = if Path::new(rel).is_absolute() {
        Path::new(rel).to_path_buf()
    } else {
        base.join(rel)
    };
    Ok(apps::load_libsvm(&path)?)
}

/// Builds the concrete problem instance. `base_dir` anchors relative
/// dataset paths.
pub fn build_problem(json: &ProblemJson, base_dir: &Path) -> Result<BuiltProblem, IoError> {
    let rho = json.rho;
    let mut built = match &json.family {
        FamilyJson::Portfolio { q, mean, s, u } => {
            let qm = to_matrix(q, "Q")?;
            let n = qm.nrows();
            if qm.ncols() != n || mean.len() != n || u.len() != n {
                return Err(IoError::Invalid("portfolio dimensions disagree".into()));
            }
            let inst = apps::PortfolioInstance {
                q: qm.clone(),
                mean_returns: mean.clone(),
                min_return: *s,
                upper: u.clone(),
                rho,
                lambda_min: apps::min_eigenvalue(&qm),
                alpha0: 0.95 * (2.0 * apps::min_eigenvalue(&qm)).sqrt().max(1e-6),
            };
            BuiltProblem { problem: apps::build_portfolio(&inst)?, split: None }
        }
        FamilyJson::BasisPursuit { a, b, eps } => {
            let am = to_matrix(a, "A")?;
            if b.len() != am.nrows() {
                return Err(IoError::Invalid("basis pursuit: |b| != rows of A".into()));
            }
            let inst = apps::BasisPursuitInstance {
                a: am,
                b: b.clone(),
                eps_ball: *eps,
                true_signal: Vec::new(),
                noise: Vec::new(),
            };
            BuiltProblem { problem: apps::build_basis_pursuit(&inst)?, split: None }
        }
        FamilyJson::Logistic { libsvm_path, r, rho_scale } => {
            let data = load_dataset(base_dir, libsvm_path)?;
            let eff_rho = rho_scale / data.len() as f64;
            let (p, map) = apps::build_logistic(&data, eff_rho, *r)?;
            BuiltProblem { problem: p, split: Some(map) }
        }
        FamilyJson::Svm { libsvm_path, rho_scale } => {
            let data = load_dataset(base_dir, libsvm_path)?;
            let eff_rho = match rho_scale {
                Some(scale) => scale / data.len() as f64,
                None => rho,
            };
            let (p, map) = apps::build_svm(&data, eff_rho)?;
            BuiltProblem { problem: p, split: Some(map) }
        }
        FamilyJson::Dictionary { z, l } => {
            let zm = to_matrix(z, "Z")?;
            let inst = apps::DictionaryInstance {
                z: zm.clone(),
                l: *l,
                rho,
                true_c: DMatrix::zeros(*l, zm.ncols()),
                true_d: DMatrix::zeros(*l, zm.nrows()),
            };
            BuiltProblem { problem: apps::build_dictionary(&inst)?, split: None }
        }
        FamilyJson::SeparableQuadratic { target, weights } => BuiltProblem {
            problem: apps::separable_quadratic(target.clone(), weights.clone(), rho)?,
            split: None,
        },
        FamilyJson::LinearBall => {
            let n = json.n.ok_or_else(|| IoError::Invalid("linear_ball needs n".into()))?;
            BuiltProblem { problem: apps::linear_ball(n, rho)?, split: None }
        }
        FamilyJson::EqualityBall => {
            let n = json.n.ok_or_else(|| IoError::Invalid("equality_ball needs n".into()))?;
            BuiltProblem { problem: apps::equality_ball(n, rho)?, split: None }
        }
        FamilyJson::NegLinear => {
            BuiltProblem { problem: apps::neg_linear(rho)?, split: None }
        }
    };

    if let Some(name) = &json.name {
        built.problem.name = name.clone();
    }
    if let Some(n) = json.n {
        if built.problem.n != n && !matches!(json.family, FamilyJson::LinearBall | FamilyJson::EqualityBall)
        {
            return Err(IoError::Invalid(format!(
                "declared n = {n} but the family builds dimension {}",
                built.problem.n
            )));
        }
    }
    if let Some(ub) = &json.upper_bounds {
        if ub.len() != built.problem.n {
            return Err(IoError::Invalid(format!(
                "upper_bounds has length {}, problem dimension is {}",
                ub.len(),
                built.problem.n
            )));
        }
        built.problem = built.problem.clone().with_upper(ub.clone())?;
    }
    Ok(built)
}

pub fn load_problem(path: &Path) -> Result<BuiltProblem, IoError> {
    let text = std::fs::read_to_string(path)?;
    let json: ProblemJson = serde_json::from_str(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    build_problem(&json, base)
}

pub fn load_point(path: &Path) -> Result<PointJson, IoError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_quadratic_roundtrip() {
        let text = r#"{"name":"toy","rho":1.0,"family":"separable_quadratic","target":[2.0]}"#;
        let json: ProblemJson = serde_json::from_str(text).unwrap();
        let built = build_problem(&json, Path::new(".")).unwrap();
        assert_eq!(built.problem.n, 1);
        assert_eq!(built.problem.f(&[2.0]), 0.0);
    }

    #[test]
    fn portfolio_json_builds() {
        let text = r#"{
            "rho": 0.1, "family": "portfolio",
            "Q": [[1.0, 0.0], [0.0, 1.0]],
            "mean": [1.0, 2.0], "s": 1.5, "u": [1.0, 1.0]
        }"#;
        let json: ProblemJson = serde_json::from_str(text).unwrap();
        let built = build_problem(&json, Path::new(".")).unwrap();
        assert_eq!(built.problem.n, 2);
        assert_eq!(built.problem.m(), 1);
        assert_eq!(built.problem.p(), 1);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let text = r#"{"n": 3, "rho":1.0,"family":"separable_quadratic","target":[2.0]}"#;
        let json: ProblemJson = serde_json::from_str(text).unwrap();
        assert!(build_problem(&json, Path::new(".")).is_err());
    }

    #[test]
    fn penalty_choice_falls_back_to_problem_rho() {
        let choice: PenaltyChoice =
            serde_json::from_str(r#"{"kind":"natural"}"#).unwrap();
        let spec = choice.to_spec(2.0, 3).unwrap();
        assert_eq!(spec.rho, 2.0);
        assert_eq!(spec.kind, PenaltyKind::NaturalQuadratic);
        assert_eq!(spec.n, 3);
    }
}
