//! Sparse portfolio selection:
//! `min x^T Q x + rho ||x||_0` over `e^T x = 1, mean^T x >= s, 0 <= x <= u`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::problem::{ConstraintBlock, Objective, ProblemError, SparseProblem};

#[derive(Debug, Clone)]
pub struct PortfolioInstance {
    pub q: DMatrix<f64>,
    pub mean_returns: Vec<f64>,
    pub min_return: f64,
    pub upper: Vec<f64>,
    pub rho: f64,
    pub lambda_min: f64,
    /// Recommended starting weight `c * sqrt(2 lambda_min)`, below the
    /// threshold where the penalized quadratic stays strictly convex.
    pub alpha0: f64,
}

/// `Qhat = 0.5 [[2Q, alpha I], [alpha I, I]]`, the quadratic form of the
/// penalized problem with the natural penalty; positive definite exactly
/// when `alpha^2 < 2 lambda_min(Q)`.
pub fn qhat(q: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    let n = q.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = q[(i, j)];
        }
        out[(i, n + i)] = 0.5 * alpha;
        out[(n + i, i)] = 0.5 * alpha;
        out[(n + i, n + i)] = 0.5;
    }
    out
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.min()
}

struct QuadraticForm {
    q: DMatrix<f64>,
}

impl Objective for QuadraticForm {
    fn value(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        (v.transpose() * &self.q * &v)[(0, 0)]
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let v = DVector::from_column_slice(x);
        let g = &self.q * v * 2.0;
        grad.copy_from_slice(g.as_slice());
    }
}

struct BudgetRow;

impl ConstraintBlock for BudgetRow {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x.iter().sum::<f64>() - 1.0;
    }
    fn jacobian(&self, x: &[f64], out: &mut DMatrix<f64>) {
        for c in 0..x.len() {
            out[(0, c)] = 1.0;
        }
    }
}

struct ReturnRow {
    mean: Vec<f64>,
    s: f64,
}

impl ConstraintBlock for ReturnRow {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.s - self.mean.iter().zip(x).map(|(m, v)| m * v).sum::<f64>();
    }
    fn jacobian(&self, _x: &[f64], out: &mut DMatrix<f64>) {
        for c in 0..self.mean.len() {
            out[(0, c)] = -self.mean[c];
        }
    }
}

/// Seeded instance with `Q = B^T B + sigma I` (so `lambda_min > 0`),
/// positive mean returns, target return at 80% of the best attainable
/// one, and unit upper bounds. `c` scales the recommended `alpha0`.
pub fn gen_portfolio(n: usize, seed: u64, rho: f64, c: f64) -> PortfolioInstance {
    assert!(n >= 2, "portfolio needs at least two assets");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        // Idiosyncratic variance on the order of the factor risk: the
        // optima then spread over a few assets instead of racing
        // near-tied singletons.
        let b = DMatrix::from_fn(n, n, |_, _| {
            let v: f64 = rng.sample(StandardNormal);
            v / (n as f64).sqrt()
        });
        let sigma = 1.0 + 2.0 * rng.gen::<f64>();
        let q = b.transpose() * &b + DMatrix::identity(n, n) * sigma;
        let mean_returns: Vec<f64> = (0..n).map(|_| 0.5 + rng.gen::<f64>()).collect();
        let best = mean_returns.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min_return = 0.8 * best;
        let lambda_min = min_eigenvalue(&q);
        if lambda_min <= 0.0 {
            continue;
        }
        let alpha0 = c * (2.0 * lambda_min).sqrt();
        return PortfolioInstance {
            q,
            mean_returns,
            min_return,
            upper: vec![1.0; n],
            rho,
            lambda_min,
            alpha0,
        };
    }
}

pub fn build_portfolio(inst: &PortfolioInstance) -> Result<SparseProblem, ProblemError> {
    let n = inst.q.nrows();
    SparseProblem::new(
        "portfolio",
        n,
        Arc::new(QuadraticForm { q: inst.q.clone() }),
        inst.rho,
    )?
    .with_upper(inst.upper.clone())?
    .with_eq(Arc::new(BudgetRow))
    .with_ineq(Arc::new(ReturnRow { mean: inst.mean_returns.clone(), s: inst.min_return }))
    .with_mask(vec![true; n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::enumerate_supports;

    #[test]
    fn qhat_definiteness_boundary_for_identity() {
        let q = DMatrix::identity(4, 4);
        // lambda_min = 1, threshold sqrt(2).
        assert!(min_eigenvalue(&qhat(&q, 1.3)) > 0.0);
        assert!(min_eigenvalue(&qhat(&q, 1.5)) < 0.0);
    }

    #[test]
    fn schur_criterion_matches_eigenvalues() {
        for seed in 0..5u64 {
            let inst = gen_portfolio(6, seed, 1.0, 0.95);
            let bound = (2.0 * inst.lambda_min).sqrt();
            for alpha in [0.3 * bound, 0.9 * bound, 1.1 * bound, 2.0 * bound] {
                let pd = min_eigenvalue(&qhat(&inst.q, alpha)) > 0.0;
                assert_eq!(pd, alpha * alpha < 2.0 * inst.lambda_min, "alpha={alpha}");
            }
        }
    }

    #[test]
    fn two_asset_oracle_example() {
        let inst = PortfolioInstance {
            q: DMatrix::identity(2, 2),
            mean_returns: vec![1.0, 2.0],
            min_return: 1.5,
            upper: vec![1.0, 1.0],
            rho: 0.1,
            lambda_min: 1.0,
            alpha0: 0.95 * 2.0f64.sqrt(),
        };
        let p = build_portfolio(&inst).unwrap();
        let oracle = enumerate_supports(&p, 14).unwrap();
        // {1, 2}: x = (.5, .5), value 0.5 + 0.2 = 0.7 beats {2}: 1 + 0.1.
        assert_eq!(oracle.best_support, vec![0, 1]);
        assert!((oracle.best_value - 0.7).abs() <= 1e-5, "{}", oracle.best_value);
    }

    #[test]
    fn generated_instances_are_feasible() {
        for seed in 0..10u64 {
            let inst = gen_portfolio(8, seed, 1.0, 0.95);
            let p = build_portfolio(&inst).unwrap();
            // Concentrating on the best asset is always feasible.
            let best = inst
                .mean_returns
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            let mut x = vec![0.0; 8];
            x[best] = 1.0;
            assert!(p.infeasibility(&x) <= 1e-12);
            assert!(inst.alpha0 < (2.0 * inst.lambda_min).sqrt());
        }
    }
}
