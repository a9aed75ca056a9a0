//! Sparse support vector machine with l0-penalized slack:
//! `min (1/2m) ||c||^2 + rho ||u||_0`
//! s.t. `u >= 0, u >= e - t o (Z c - gamma e)`,
//! over weights `c`, offset `gamma` and slack `u`; only the slack block
//! carries the sparsity term. `c` and `gamma` are free and get split.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::apps::libsvm::ClassificationDataset;
use crate::problem::{ConstraintBlock, Objective, ProblemError, SparseProblem};
use crate::split::{split_free_variables, SplitMap};

/// Variable layout before splitting: `[c (n) | gamma (1) | u (m)]`.
struct SvmObjective {
    n: usize,
    m: usize,
}

impl Objective for SvmObjective {
    fn value(&self, x: &[f64]) -> f64 {
        let c = &x[..self.n];
        c.iter().map(|v| v * v).sum::<f64>() / (2.0 * self.m as f64)
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
        for i in 0..self.n {
            grad[i] = x[i] / self.m as f64;
        }
    }
}

/// Hinge rows `1 - t_i (z_i^T c - gamma) - u_i <= 0`.
struct HingeRows {
    samples: Vec<Vec<f64>>,
    labels: Vec<f64>,
    n: usize,
}

impl ConstraintBlock for HingeRows {
    fn dim(&self) -> usize {
        self.labels.len()
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let (c, rest) = x.split_at(self.n);
        let gamma = rest[0];
        let u = &rest[1..];
        for (i, (z, &t)) in self.samples.iter().zip(&self.labels).enumerate() {
            let score: f64 = z.iter().zip(c).map(|(zi, ci)| zi * ci).sum::<f64>() - gamma;
            out[i] = 1.0 - t * score - u[i];
        }
    }
    fn jacobian(&self, _x: &[f64], out: &mut DMatrix<f64>) {
        out.fill(0.0);
        for (i, (z, &t)) in self.samples.iter().zip(&self.labels).enumerate() {
            for (j, zi) in z.iter().enumerate() {
                out[(i, j)] = -t * zi;
            }
            out[(i, self.n)] = t;
            out[(i, self.n + 1 + i)] = -1.0;
        }
    }
}

pub fn build_svm(
    data: &ClassificationDataset,
    rho: f64,
) -> Result<(SparseProblem, SplitMap), ProblemError> {
    if data.is_empty() {
        return Err(ProblemError::Invalid("empty dataset".into()));
    }
    let n = data.n_features;
    let m = data.len();
    let total = n + 1 + m;
    let mut mask = vec![false; total];
    let mut free = vec![false; total];
    for i in 0..n + 1 {
        free[i] = true;
    }
    for i in n + 1..total {
        mask[i] = true;
    }
    let unsplit = SparseProblem::new("svm", total, Arc::new(SvmObjective { n, m }), rho)?
        .with_ineq(Arc::new(HingeRows {
            samples: data.samples.clone(),
            labels: data.labels.clone(),
            n,
        }))
        .with_mask(mask)?
        .with_free(&free, 1e4)?;
    split_free_variables(&unsplit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::synth::gen_blobs;
    use crate::oracle::{gradient_check, restricted_solve, ConstraintRow};
    use crate::problem::l0_count;

    #[test]
    fn slack_at_origin_is_all_ones() {
        let data = gen_blobs(6, 3, 9, 2.0);
        let (p, map) = build_svm(&data, 1.0 / 6.0).unwrap();
        // c = 0, gamma = 0, u must cover the hinge: u_min = e.
        let n = data.n_features;
        let mut orig = vec![0.0; n + 1 + 6];
        for i in 0..6 {
            orig[n + 1 + i] = 1.0;
        }
        let z = map.to_split(&orig);
        let g = p.eval_g(&z);
        assert!(g.iter().all(|&gi| gi.abs() <= 1e-12));
        assert_eq!(l0_count(&p, &z, 1e-8), 6);
    }

    #[test]
    fn separable_toy_supports_zero_slack() {
        // Two points, one feature, separable: restricted solve with the
        // whole slack block pinned to zero is feasible and drives f low.
        let data = ClassificationDataset {
            samples: vec![vec![2.0], vec![-2.0]],
            labels: vec![1.0, -1.0],
            n_features: 1,
        };
        let (p, _) = build_svm(&data, 0.5).unwrap();
        let out = restricted_solve(&p, &[]).unwrap();
        let (v, x) = out.expect("separable toy must admit zero slack");
        assert!(v >= 0.0 && v <= 0.1, "objective {v}");
        assert!(p.infeasibility(&x) <= 1e-6);
    }

    #[test]
    fn objective_and_hinge_gradients_check_out() {
        let data = gen_blobs(8, 4, 3, 1.0);
        let (p, _) = build_svm(&data, 0.125).unwrap();
        let x: Vec<f64> = (0..p.n).map(|i| 0.1 + 0.03 * i as f64).collect();
        assert!(gradient_check(p.objective.as_ref(), &x, 1e-6) <= 1e-9);
        let g = p.ineq.as_ref().unwrap();
        for row in 0..3 {
            let adapter = ConstraintRow { block: g.as_ref(), row };
            assert!(gradient_check(&adapter, &x, 1e-6) <= 1e-8);
        }
    }
}
