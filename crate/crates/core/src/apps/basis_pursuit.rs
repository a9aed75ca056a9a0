//! Sign-constrained basis pursuit:
//! `min ||x||_0` s.t. `||A x - b||^2 <= eps, x >= 0`.
//!
//! Instances are planted: `b = A x0 + r` for a nonnegative `k`-sparse
//! signal and noise `r`, with `eps = ||r||^2 (1 + delta)` so the planted
//! signal is always strictly feasible. The zero objective makes every
//! feasible point a local minimum, which is exactly why these problems
//! exercise the penalty loop rather than plain descent.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::problem::{ConstraintBlock, Objective, ProblemError, SparseProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryDistribution {
    Uniform01,
    /// Integer entries 0..=99 as in the full-scale construction.
    UniformInt0to99,
    StdNormal,
}

#[derive(Debug, Clone)]
pub struct BasisPursuitInstance {
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub eps_ball: f64,
    pub true_signal: Vec<f64>,
    pub noise: Vec<f64>,
}

struct ZeroObjective;

impl Objective for ZeroObjective {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, _x: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
    }
}

/// Single inequality `||A x - b||^2 - eps <= 0`.
struct ResidualBall {
    a: DMatrix<f64>,
    b: DVector<f64>,
    eps: f64,
}

impl ConstraintBlock for ResidualBall {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let r = &self.a * DVector::from_column_slice(x) - &self.b;
        out[0] = r.norm_squared() - self.eps;
    }
    fn jacobian(&self, x: &[f64], out: &mut DMatrix<f64>) {
        let r = &self.a * DVector::from_column_slice(x) - &self.b;
        let row = r.transpose() * &self.a * 2.0;
        for c in 0..self.a.ncols() {
            out[(0, c)] = row[(0, c)];
        }
    }
}

pub fn gen_basis_pursuit(
    m: usize,
    n: usize,
    k: usize,
    noise_sigma: f64,
    delta_slack: f64,
    seed: u64,
    dist: EntryDistribution,
) -> BasisPursuitInstance {
    assert!(k <= n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(m, n, |_, _| match dist {
        EntryDistribution::Uniform01 => rng.gen::<f64>(),
        EntryDistribution::UniformInt0to99 => rng.gen_range(0..100) as f64,
        EntryDistribution::StdNormal => rng.sample(StandardNormal),
    });
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let mut x0 = vec![0.0; n];
    for &i in idx.iter().take(k) {
        x0[i] = rng.gen::<f64>();
    }
    let noise: Vec<f64> = (0..m)
        .map(|_| {
            let v: f64 = rng.sample(StandardNormal);
            noise_sigma * v
        })
        .collect();
    let ax = &a * DVector::from_column_slice(&x0);
    let b: Vec<f64> = (0..m).map(|i| ax[i] + noise[i]).collect();
    let noise_sq: f64 = noise.iter().map(|v| v * v).sum();
    BasisPursuitInstance {
        a,
        b,
        eps_ball: noise_sq * (1.0 + delta_slack),
        true_signal: x0,
        noise,
    }
}

pub fn build_basis_pursuit(inst: &BasisPursuitInstance) -> Result<SparseProblem, ProblemError> {
    let n = inst.a.ncols();
    Ok(SparseProblem::new("basis-pursuit", n, Arc::new(ZeroObjective), 1.0)?
        .with_ineq(Arc::new(ResidualBall {
            a: inst.a.clone(),
            b: DVector::from_column_slice(&inst.b),
            eps: inst.eps_ball,
        })))
}
