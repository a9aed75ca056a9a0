//! Dense two-phase primal simplex on standard form
//! `max c^T w  s.t.  A w = b, w >= 0`, with Bland's rule. Sized for the
//! desk-scale linear programs produced by the constraint-qualification
//! checks.

use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { value: f64, w: Vec<f64> },
    Infeasible,
    Unbounded,
    IterLimit,
}

const PIVOT_TOL: f64 = 1e-9;

struct Tableau {
    /// rows x (cols + 1); last column is the right-hand side.
    t: DMatrix<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.t[(row, col)];
        let ncols = self.t.ncols();
        for j in 0..ncols {
            self.t[(row, j)] /= piv;
        }
        for r in 0..self.t.nrows() {
            if r != row {
                let factor = self.t[(r, col)];
                if factor != 0.0 {
                    for j in 0..ncols {
                        self.t[(r, j)] -= factor * self.t[(row, j)];
                    }
                }
            }
        }
        self.basis[row] = col;
    }

    /// Runs Bland-rule simplex maximizing `obj` (a row of reduced costs
    /// kept by the caller). Returns None on success, or the unbounded
    /// entering column.
    fn optimize(&mut self, cost: &mut Vec<f64>, value: &mut f64, max_iter: usize) -> Result<(), LpOutcome> {
        for _ in 0..max_iter {
            // Entering: smallest index with positive reduced cost.
            let enter = (0..cost.len()).find(|&j| cost[j] > PIVOT_TOL);
            let Some(col) = enter else {
                return Ok(());
            };
            // Leaving: min ratio, smallest basis index on ties.
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.t.nrows() {
                let a = self.t[(r, col)];
                if a > PIVOT_TOL {
                    let ratio = self.t[(r, self.t.ncols() - 1)] / a;
                    match best {
                        None => best = Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - PIVOT_TOL
                                || ((ratio - bratio).abs() <= PIVOT_TOL
                                    && self.basis[r] < self.basis[br])
                            {
                                best = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = best else {
                return Err(LpOutcome::Unbounded);
            };
            // Update reduced costs alongside the tableau.
            let piv = self.t[(row, col)];
            let factor = cost[col] / piv;
            let ncols = self.t.ncols();
            for j in 0..ncols - 1 {
                cost[j] -= factor * self.t[(row, j)];
            }
            *value += factor * self.t[(row, ncols - 1)];
            self.pivot(row, col);
        }
        Err(LpOutcome::IterLimit)
    }
}

/// Solves `max c^T w  s.t.  A w = b, w >= 0`.
pub(crate) fn simplex_max(c: &[f64], a: &DMatrix<f64>, b: &[f64], max_iter: usize) -> LpOutcome {
    let (m, n) = (a.nrows(), a.ncols());
    debug_assert_eq!(c.len(), n);
    debug_assert_eq!(b.len(), m);
    if m == 0 {
        // Only w >= 0: bounded iff no positive cost.
        return if c.iter().any(|&cj| cj > PIVOT_TOL) {
            LpOutcome::Unbounded
        } else {
            LpOutcome::Optimal { value: 0.0, w: vec![0.0; n] }
        };
    }

    // Phase 1 with one artificial per row, rhs made nonnegative.
    let total = n + m;
    let mut t = DMatrix::zeros(m, total + 1);
    for r in 0..m {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(r, j)] = sign * a[(r, j)];
        }
        t[(r, n + r)] = 1.0;
        t[(r, total)] = sign * b[r];
    }
    let basis: Vec<usize> = (0..m).map(|r| n + r).collect();
    let mut tab = Tableau { t, basis };

    // Phase-1 objective: max -(sum of artificials). Reduced costs for the
    // starting artificial basis.
    let mut cost = vec![0.0; total];
    let mut value = 0.0;
    for j in 0..n {
        let col_sum: f64 = (0..m).map(|r| tab.t[(r, j)]).sum();
        cost[j] = col_sum;
    }
    value -= (0..m).map(|r| tab.t[(r, total)]).sum::<f64>();
    if let Err(out) = tab.optimize(&mut cost, &mut value, max_iter) {
        if out == LpOutcome::Unbounded {
            // Phase 1 is bounded by construction; treat as failure.
            return LpOutcome::IterLimit;
        }
        return out;
    }
    if value < -1e-7 {
        return LpOutcome::Infeasible;
    }

    // Drive remaining artificials out of the basis where possible; rows
    // where no real pivot exists are redundant and dropped.
    let mut drop_rows = Vec::new();
    for r in 0..m {
        if tab.basis[r] >= n {
            let piv = (0..n).find(|&j| tab.t[(r, j)].abs() > PIVOT_TOL);
            match piv {
                Some(j) => tab.pivot(r, j),
                None => drop_rows.push(r),
            }
        }
    }
    let keep: Vec<usize> = (0..m).filter(|r| !drop_rows.contains(r)).collect();
    let t2 = DMatrix::from_fn(keep.len(), n + 1, |r, j| {
        let src = keep[r];
        if j < n {
            tab.t[(src, j)]
        } else {
            tab.t[(src, total)]
        }
    });
    let basis2: Vec<usize> = keep.iter().map(|&r| tab.basis[r]).collect();
    let mut tab2 = Tableau { t: t2, basis: basis2 };

    // Phase-2 reduced costs for the current basis.
    let mut cost2 = c.to_vec();
    let mut value2 = 0.0;
    for (r, &bj) in tab2.basis.iter().enumerate() {
        let cb = c[bj];
        if cb != 0.0 {
            for j in 0..n {
                cost2[j] -= cb * tab2.t[(r, j)];
            }
            value2 += cb * tab2.t[(r, n)];
        }
    }
    match tab2.optimize(&mut cost2, &mut value2, max_iter) {
        Ok(()) => {
            let mut w = vec![0.0; n];
            for (r, &bj) in tab2.basis.iter().enumerate() {
                if bj < n {
                    w[bj] = tab2.t[(r, n)];
                }
            }
            LpOutcome::Optimal { value: value2, w }
        }
        Err(out) => out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp_optimal() {
        // max x + y s.t. x + y + s = 1 -> value 1.
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let out = simplex_max(&[1.0, 1.0, 0.0], &a, &[1.0], 200);
        match out {
            LpOutcome::Optimal { value, .. } => assert!((value - 1.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasible() {
        // x + y = -1 with x, y >= 0.
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        assert_eq!(simplex_max(&[0.0, 0.0], &a, &[-1.0], 200), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        // max x s.t. x - y = 0: x can grow with y.
        let a = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        assert_eq!(simplex_max(&[1.0, 0.0], &a, &[0.0], 200), LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_redundant_rows() {
        // Duplicate constraint rows; still solvable.
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let out = simplex_max(&[0.0, 2.0, 1.0], &a, &[2.0, 2.0], 200);
        match out {
            LpOutcome::Optimal { value, .. } => assert!((value - 4.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
