//! Dictionary learning with an l0-sparse code:
//! `min 0.5 ||Z - D^T C||_F^2 + rho ||C||_0` s.t. `||D_j||_2^2 <= 1`
//! per dictionary row, with `C = C+ - C-` split into nonnegative halves.
//! The dictionary block is unpenalized and box-free; its stationarity is
//! certified by the projected-gradient residual of the row-ball
//! projection.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::problem::{BlockProjection, Objective, ProblemError, SparseProblem};

#[derive(Debug, Clone)]
pub struct DictionaryInstance {
    /// Data matrix, `n x m`.
    pub z: DMatrix<f64>,
    /// Dictionary size (rows of `D`, rows of `C`).
    pub l: usize,
    pub rho: f64,
    pub true_c: DMatrix<f64>,
    pub true_d: DMatrix<f64>,
}

/// Variable layout: `[C+ (l*m) | C- (l*m) | D (l*n)]`, all row-major.
struct DictLoss {
    z: DMatrix<f64>,
    l: usize,
    n: usize,
    m: usize,
}

impl DictLoss {
    fn unpack(&self, x: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let lm = self.l * self.m;
        let c = DMatrix::from_fn(self.l, self.m, |r, cc| {
            x[r * self.m + cc] - x[lm + r * self.m + cc]
        });
        let d = DMatrix::from_fn(self.l, self.n, |r, cc| x[2 * lm + r * self.n + cc]);
        (c, d)
    }
}

impl Objective for DictLoss {
    fn value(&self, x: &[f64]) -> f64 {
        let (c, d) = self.unpack(x);
        let r = &self.z - d.transpose() * &c;
        0.5 * r.norm_squared()
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let (c, d) = self.unpack(x);
        let r = &self.z - d.transpose() * &c;
        // grad_C = -D R, grad_D = -C R^T.
        let gc = -(&d * &r);
        let gd = -(&c * r.transpose());
        let lm = self.l * self.m;
        for row in 0..self.l {
            for col in 0..self.m {
                let g = gc[(row, col)];
                grad[row * self.m + col] = g;
                grad[lm + row * self.m + col] = -g;
            }
            for col in 0..self.n {
                grad[2 * lm + row * self.n + col] = gd[(row, col)];
            }
        }
    }
}

/// Planted instance: `C` has `nonzeros_per_col` standard-normal entries
/// per column, `D` is standard normal with unit-normalized rows, and
/// `Z = D^T C` exactly.
pub fn gen_dictionary(
    n: usize,
    l: usize,
    m: usize,
    nonzeros_per_col: usize,
    rho: f64,
    seed: u64,
) -> DictionaryInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = DMatrix::zeros(l, m);
    for col in 0..m {
        let mut rows: Vec<usize> = (0..l).collect();
        for _ in 0..nonzeros_per_col.min(l) {
            let pick = rng.gen_range(0..rows.len());
            let row = rows.swap_remove(pick);
            c[(row, col)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let mut d = DMatrix::from_fn(l, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    for r in 0..l {
        let nrm = d.row(r).norm();
        if nrm > 0.0 {
            for cc in 0..n {
                d[(r, cc)] /= nrm;
            }
        }
    }
    let z = d.transpose() * &c;
    DictionaryInstance { z, l, rho, true_c: c, true_d: d }
}

pub fn build_dictionary(inst: &DictionaryInstance) -> Result<SparseProblem, ProblemError> {
    let n = inst.z.nrows();
    let m = inst.z.ncols();
    let l = inst.l;
    let lm = l * m;
    let total = 2 * lm + l * n;
    let mut mask = vec![true; total];
    for v in mask.iter_mut().skip(2 * lm) {
        *v = false;
    }
    SparseProblem::new(
        "dictionary",
        total,
        Arc::new(DictLoss { z: inst.z.clone(), l, n, m }),
        inst.rho,
    )?
    .with_mask(mask)?
    .with_projection(BlockProjection::UnitBallRows { offset: 2 * lm, rows: l, cols: n })
}

/// Standard-normal start projected onto the feasible set, plus the
/// matching auxiliary start at the penalty minimizer.
pub fn dictionary_start(
    problem: &SparseProblem,
    penalty_minimizer: f64,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd1c7);
    let mut x: Vec<f64> = (0..problem.n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    problem.project(&mut x);
    let y = vec![penalty_minimizer; problem.num_masked()];
    (x, y)
}
