//! Sparse logistic regression over split parameters:
//! `min (1/m) sum_i log(1 + exp(-t_i z_i^T a)) + rho ||(a+, a-)||_0`
//! with `a = a+ - a-`, both halves in `[0, r]`.

use std::sync::Arc;

use crate::apps::libsvm::ClassificationDataset;
use crate::problem::{Objective, ProblemError, SparseProblem};
use crate::split::{split_free_variables, SplitMap};

struct LogisticLoss {
    samples: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

/// log(1 + exp(v)) without overflow.
fn log1p_exp(v: f64) -> f64 {
    if v > 35.0 {
        v
    } else if v < -35.0 {
        v.exp()
    } else {
        v.exp().ln_1p()
    }
}

/// 1 / (1 + exp(v)) without overflow.
fn sigma_neg(v: f64) -> f64 {
    if v > 35.0 {
        (-v).exp()
    } else if v < -35.0 {
        1.0
    } else {
        1.0 / (1.0 + v.exp())
    }
}

impl Objective for LogisticLoss {
    fn value(&self, a: &[f64]) -> f64 {
        let m = self.labels.len() as f64;
        let mut total = 0.0;
        for (z, &t) in self.samples.iter().zip(&self.labels) {
            let w: f64 = z.iter().zip(a).map(|(zi, ai)| zi * ai).sum();
            total += log1p_exp(-t * w);
        }
        total / m
    }

    fn gradient(&self, a: &[f64], grad: &mut [f64]) {
        let m = self.labels.len() as f64;
        grad.fill(0.0);
        for (z, &t) in self.samples.iter().zip(&self.labels) {
            let w: f64 = z.iter().zip(a).map(|(zi, ai)| zi * ai).sum();
            // d/da log(1+exp(-t w)) = -t * sigma(-t w) * z
            let coeff = -t * sigma_neg(t * w);
            for (gi, zi) in grad.iter_mut().zip(z) {
                *gi += coeff * zi;
            }
        }
        for g in grad.iter_mut() {
            *g /= m;
        }
    }
}

/// Builds the split nonnegative form. `rho` is the already-scaled
/// sparsity weight (the usual convention is `c / m`).
pub fn build_logistic(
    data: &ClassificationDataset,
    rho: f64,
    box_r: f64,
) -> Result<(SparseProblem, SplitMap), ProblemError> {
    if data.is_empty() {
        return Err(ProblemError::Invalid("empty dataset".into()));
    }
    let n = data.n_features;
    let loss = LogisticLoss { samples: data.samples.clone(), labels: data.labels.clone() };
    let unsplit = SparseProblem::new("logistic", n, Arc::new(loss), rho)?
        .with_free(&vec![true; n], box_r)?;
    split_free_variables(&unsplit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::gradient_check;
    use crate::apps::synth::gen_blobs;

    #[test]
    fn loss_at_zero_is_log_two() {
        let data = gen_blobs(12, 4, 5, 2.0);
        let (p, _) = build_logistic(&data, 0.1 / 12.0, 100.0).unwrap();
        let z = vec![0.0; p.n];
        assert!((p.f(&z) - std::f64::consts::LN_2).abs() <= 1e-12);
    }

    #[test]
    fn separating_ray_decreases_loss() {
        // Single feature, perfectly separated: scaling the weight up can
        // only decrease the loss.
        let data = ClassificationDataset {
            samples: vec![vec![1.0], vec![-1.0]],
            labels: vec![1.0, -1.0],
            n_features: 1,
        };
        let (p, map) = build_logistic(&data, 0.5, 100.0).unwrap();
        let mut last = f64::INFINITY;
        for scale in [0.0, 1.0, 5.0, 20.0, 80.0] {
            let z = map.to_split(&[scale]);
            let v = p.f(&z);
            assert!(v <= last + 1e-15);
            last = v;
        }
        assert!(last <= 1e-8);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = gen_blobs(20, 6, 11, 1.5);
        let (p, _) = build_logistic(&data, 0.01, 100.0).unwrap();
        let x: Vec<f64> = (0..p.n).map(|i| 0.05 * (i as f64 + 1.0)).collect();
        let err = gradient_check(p.objective.as_ref(), &x, 1e-6);
        assert!(err <= 1e-6, "relative error {err}");
    }
}
