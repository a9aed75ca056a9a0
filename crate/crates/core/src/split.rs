//! Free-variable splitting `a = a+ - a-` with `a+, a- >= 0`.
//!
//! The penalty method needs sign constraints on every coordinate, so a
//! coordinate declared free inside `[-r, r]` is replaced by two
//! nonnegative halves. The split is not unique: any ray point
//! `(a+ + t, a- + t)` represents the same `a`, and each such point is a
//! local minimum of the split problem. Those rays are collapsed only at
//! reporting time by the shrink-by-min postprocess, never inside the
//! solve, so solver trajectories are unaffected.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::problem::{ConstraintBlock, Objective, ProblemError, SparseProblem};

/// Coordinate bookkeeping between an original problem and its split form.
///
/// Layout of the split vector: the original `n` positions (free
/// coordinates hold the positive half), followed by one negative half per
/// free coordinate in increasing original index.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitMap {
    pub orig_n: usize,
    /// Original indices of the free coordinates, increasing.
    pub free: Vec<usize>,
}

impl SplitMap {
    pub fn split_n(&self) -> usize {
        self.orig_n + self.free.len()
    }

    /// Position of the negative half of `free[k]` in the split vector.
    pub fn neg_pos(&self, k: usize) -> usize {
        self.orig_n + k
    }

    /// Recombines a split point into original coordinates.
    pub fn to_original(&self, z: &[f64]) -> Vec<f64> {
        let mut a = z[..self.orig_n].to_vec();
        for (k, &i) in self.free.iter().enumerate() {
            a[i] = z[i] - z[self.neg_pos(k)];
        }
        a
    }

    /// Canonical split representative of an original point: one half of
    /// each free pair is zero.
    pub fn to_split(&self, a: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.split_n()];
        z[..self.orig_n].copy_from_slice(a);
        for (k, &i) in self.free.iter().enumerate() {
            if a[i] >= 0.0 {
                z[i] = a[i];
                z[self.neg_pos(k)] = 0.0;
            } else {
                z[i] = 0.0;
                z[self.neg_pos(k)] = -a[i];
            }
        }
        z
    }

    /// Subtracts the common minimum from every free pair. The recombined
    /// point is unchanged and the pair l0 count never increases.
    pub fn shrink(&self, z: &[f64]) -> Vec<f64> {
        let mut out = z.to_vec();
        for (k, &i) in self.free.iter().enumerate() {
            let j = self.neg_pos(k);
            let t = out[i].min(out[j]);
            out[i] -= t;
            out[j] -= t;
        }
        out
    }

    /// Reconstructs the original point and its shrunk split
    /// representative.
    pub fn back_map(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.to_original(z), self.shrink(z))
    }
}

struct SplitObjective {
    inner: Arc<dyn Objective>,
    map: SplitMap,
}

impl Objective for SplitObjective {
    fn value(&self, z: &[f64]) -> f64 {
        self.inner.value(&self.map.to_original(z))
    }

    fn gradient(&self, z: &[f64], grad: &mut [f64]) {
        let a = self.map.to_original(z);
        let mut ga = vec![0.0; self.map.orig_n];
        self.inner.gradient(&a, &mut ga);
        grad[..self.map.orig_n].copy_from_slice(&ga);
        for (k, &i) in self.map.free.iter().enumerate() {
            grad[self.map.neg_pos(k)] = -ga[i];
        }
    }
}

struct SplitConstraint {
    inner: Arc<dyn ConstraintBlock>,
    map: SplitMap,
}

impl ConstraintBlock for SplitConstraint {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, z: &[f64], out: &mut [f64]) {
        self.inner.eval(&self.map.to_original(z), out)
    }

    fn jacobian(&self, z: &[f64], out: &mut DMatrix<f64>) {
        let a = self.map.to_original(z);
        let mut j = DMatrix::zeros(self.inner.dim(), self.map.orig_n);
        self.inner.jacobian(&a, &mut j);
        for r in 0..j.nrows() {
            for c in 0..self.map.orig_n {
                out[(r, c)] = j[(r, c)];
            }
            for (k, &i) in self.map.free.iter().enumerate() {
                out[(r, self.map.neg_pos(k))] = -j[(r, i)];
            }
        }
    }
}

/// Doubles every coordinate with a negative lower bound into nonnegative
/// halves, composing `f`, `g`, `h` with the recombination. Masked free
/// coordinates yield two masked halves.
pub fn split_free_variables(
    problem: &SparseProblem,
) -> Result<(SparseProblem, SplitMap), ProblemError> {
    if problem.proj.is_some() {
        return Err(ProblemError::Invalid(
            "cannot split a problem with a projection block".into(),
        ));
    }
    let free: Vec<usize> = (0..problem.n).filter(|&i| problem.lower[i] < 0.0).collect();
    let map = SplitMap { orig_n: problem.n, free };
    let n2 = map.split_n();

    let mut lower = vec![0.0; n2];
    let mut upper = vec![f64::INFINITY; n2];
    let mut mask = vec![false; n2];
    for i in 0..problem.n {
        lower[i] = problem.lower[i].max(0.0);
        upper[i] = problem.upper[i];
        mask[i] = problem.l0_mask[i];
    }
    for (k, &i) in map.free.iter().enumerate() {
        let j = map.neg_pos(k);
        upper[j] = -problem.lower[i];
        mask[j] = problem.l0_mask[i];
    }

    let objective = Arc::new(SplitObjective {
        inner: Arc::clone(&problem.objective),
        map: map.clone(),
    });
    let mut split = SparseProblem::new(
        format!("{}-split", problem.name),
        n2,
        objective,
        problem.rho,
    )?;
    split.lower = lower;
    split = split.with_upper(upper)?.with_mask(mask)?;
    if let Some(g) = &problem.ineq {
        split = split.with_ineq(Arc::new(SplitConstraint {
            inner: Arc::clone(g),
            map: map.clone(),
        }));
    }
    if let Some(h) = &problem.eq {
        split = split.with_eq(Arc::new(SplitConstraint {
            inner: Arc::clone(h),
            map: map.clone(),
        }));
    }
    Ok((split, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::FnObjective;

    fn free_square(r: f64) -> SparseProblem {
        let obj = FnObjective::new(|x| x[0] * x[0], |x, g| g[0] = 2.0 * x[0]);
        SparseProblem::new("square", 1, Arc::new(obj), 1.0)
            .unwrap()
            .with_free(&[true], r)
            .unwrap()
    }

    #[test]
    fn ray_points_map_back_to_zero() {
        let (split, map) = split_free_variables(&free_square(100.0)).unwrap();
        for lam in [0.0, 1.0, 10.0] {
            let z = [lam, lam];
            let (a, shrunk) = map.back_map(&z);
            assert_eq!(a, vec![0.0]);
            assert_eq!(shrunk, vec![0.0, 0.0]);
            assert_eq!(split.f(&z), 0.0);
        }
    }

    #[test]
    fn back_map_shrinks_by_common_minimum() {
        let (_, map) = split_free_variables(&free_square(100.0)).unwrap();
        let (a, shrunk) = map.back_map(&[3.0, 1.0]);
        assert_eq!(a, vec![2.0]);
        assert_eq!(shrunk, vec![2.0, 0.0]);
    }

    #[test]
    fn split_gradient_is_consistent() {
        let (split, _) = split_free_variables(&free_square(5.0)).unwrap();
        let z = [1.5, 0.25];
        let mut g = vec![0.0; 2];
        split.grad_f(&z, &mut g);
        // f(z) = (z0 - z1)^2
        assert_eq!(g, vec![2.0 * 1.25, -2.0 * 1.25]);
        assert_eq!(split.upper, vec![5.0, 5.0]);
        assert_eq!(split.lower, vec![0.0, 0.0]);
    }

    #[test]
    fn shrink_never_increases_value_or_support() {
        let (split, map) = split_free_variables(&free_square(50.0)).unwrap();
        for (a, b) in [(3.0, 1.0), (0.7, 0.7), (0.0, 2.0), (11.0, 0.3)] {
            let z = [a, b];
            let s = map.shrink(&z);
            assert!((split.f(&s) - split.f(&z)).abs() < 1e-12);
            let nnz = |v: &[f64]| v.iter().filter(|t| t.abs() > 1e-12).count();
            assert!(nnz(&s) <= nnz(&z));
        }
    }
}
