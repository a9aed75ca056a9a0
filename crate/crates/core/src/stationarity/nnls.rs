//! Least squares with sign constraints on a subset of the columns,
//! active-set style after Lawson-Hanson. Free columns stay in the
//! passive set permanently; sign-constrained columns enter on the most
//! violated dual and leave when driven to zero.

use nalgebra::{DMatrix, DVector};

/// Minimizes `||A z - b||_2` subject to `z_i >= 0` for the flagged
/// columns. Rank-deficient passive blocks are handled through the SVD
/// pseudo-inverse.
pub(crate) fn nnls_free(a: &DMatrix<f64>, b: &DVector<f64>, nonneg: &[bool]) -> DVector<f64> {
    let (rows, cols) = (a.nrows(), a.ncols());
    debug_assert_eq!(nonneg.len(), cols);
    if cols == 0 || rows == 0 {
        return DVector::zeros(cols);
    }

    let scale = a.amax().max(b.amax()).max(1.0);
    let dual_tol = 1e-10 * scale;

    let mut passive: Vec<bool> = nonneg.iter().map(|&c| !c).collect();
    let mut z = DVector::zeros(cols);

    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let active_cols: Vec<usize> =
            (0..cols).filter(|&j| passive[j]).collect();
        if active_cols.is_empty() {
            return DVector::zeros(cols);
        }
        let sub = a.select_columns(active_cols.iter());
        let svd = sub.svd(true, true);
        let sol = svd.solve(b, 1e-12 * scale).expect("svd solve");
        let mut full = DVector::zeros(cols);
        for (k, &j) in active_cols.iter().enumerate() {
            full[j] = sol[k];
        }
        full
    };

    // Free columns are solved for immediately.
    if passive.iter().any(|&p| p) {
        z = solve_passive(&passive);
    }

    for _ in 0..3 * cols.max(8) {
        let residual = b - a * &z;
        let w = a.transpose() * &residual;
        let mut enter = None;
        let mut best = dual_tol;
        for j in 0..cols {
            if nonneg[j] && !passive[j] && w[j] > best {
                best = w[j];
                enter = Some(j);
            }
        }
        let Some(j_in) = enter else {
            return z;
        };
        passive[j_in] = true;

        loop {
            let trial = solve_passive(&passive);
            let mut alpha = 1.0f64;
            let mut blocker = None;
            for j in 0..cols {
                if passive[j] && nonneg[j] && trial[j] <= 0.0 {
                    let denom = z[j] - trial[j];
                    if denom > 0.0 {
                        let step = z[j] / denom;
                        if step < alpha {
                            alpha = step;
                            blocker = Some(j);
                        }
                    } else {
                        alpha = 0.0;
                        blocker = Some(j);
                    }
                }
            }
            if blocker.is_none() {
                z = trial;
                break;
            }
            for j in 0..cols {
                z[j] += alpha * (trial[j] - z[j]);
            }
            for j in 0..cols {
                if passive[j] && nonneg[j] && z[j] <= 1e-14 * scale {
                    z[j] = 0.0;
                    passive[j] = false;
                }
            }
            // The entering column may have been expelled right away, in
            // which case the dual test runs again from the new point.
            if !passive[j_in] {
                break;
            }
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_matches_least_squares() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0, 2.5]);
        let z = nnls_free(&a, &b, &[false, false]);
        // Normal equations solution of this small system.
        let ata = a.transpose() * &a;
        let atb = a.transpose() * &b;
        let exact = ata.lu().solve(&atb).unwrap();
        assert!((z - exact).amax() < 1e-10);
    }

    #[test]
    fn clamps_negative_coordinates() {
        // b is best approximated by a negative weight on the second
        // column, which the sign constraint forbids.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_column_slice(&[2.0, -3.0]);
        let z = nnls_free(&a, &b, &[true, true]);
        assert!((z[0] - 2.0).abs() < 1e-12);
        assert_eq!(z[1], 0.0);
    }

    #[test]
    fn zero_matrix_gives_zero_solution() {
        let a = DMatrix::zeros(3, 2);
        let b = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        let z = nnls_free(&a, &b, &[true, false]);
        assert!(z.amax() < 1e-12);
    }

    #[test]
    fn mixed_free_and_nonneg() {
        let a = DMatrix::from_row_slice(3, 3, &[
            1.0, 1.0, 0.0, //
            0.0, 1.0, 1.0, //
            1.0, 0.0, 1.0,
        ]);
        let b = DVector::from_column_slice(&[1.0, -1.0, 0.5]);
        let z = nnls_free(&a, &b, &[false, true, true]);
        let r = &b - &a * &z;
        // KKT check: free column orthogonal to residual, nonneg columns
        // have nonpositive dual when inactive.
        let w = a.transpose() * &r;
        assert!(w[0].abs() < 1e-9);
        for j in 1..3 {
            if z[j] > 0.0 {
                assert!(w[j].abs() < 1e-9);
            } else {
                assert!(w[j] <= 1e-9);
            }
        }
    }
}
