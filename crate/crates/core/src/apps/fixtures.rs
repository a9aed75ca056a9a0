//! Small closed-form fixture problems used by the diagnostics tests and
//! the CLI.

use std::sync::Arc;

use crate::problem::{FnConstraint, FnObjective, ProblemError, SparseProblem};

/// `min sum_i x_i + rho ||x||_0` s.t. `||x||^2 <= 1, x >= 0`.
/// The origin is the unique local/global minimum and the only
/// AS-stationary point.
pub fn linear_ball(n: usize, rho: f64) -> Result<SparseProblem, ProblemError> {
    let obj = FnObjective::new(|x| x.iter().sum(), |_x, g| g.fill(1.0));
    let g = FnConstraint::new(
        1,
        |x, out| out[0] = x.iter().map(|v| v * v).sum::<f64>() - 1.0,
        |x, j| {
            for c in 0..x.len() {
                j[(0, c)] = 2.0 * x[c];
            }
        },
    );
    Ok(SparseProblem::new("linear-ball", n, Arc::new(obj), rho)?
        .with_ineq(Arc::new(g)))
}

/// `min x_1 + rho ||x||_0` s.t. `0.5 ||x - e||^2 = 0, x >= 0`.
/// The unique feasible point `e` is AS-stationary via unbounded
/// multipliers but not S-stationary (the equality gradient vanishes).
pub fn equality_ball(n: usize, rho: f64) -> Result<SparseProblem, ProblemError> {
    let obj = FnObjective::new(
        |x| x[0],
        |_x, g| {
            g.fill(0.0);
            g[0] = 1.0;
        },
    );
    let h = FnConstraint::new(
        1,
        |x, out| out[0] = 0.5 * x.iter().map(|v| (v - 1.0) * (v - 1.0)).sum::<f64>(),
        |x, j| {
            for c in 0..x.len() {
                j[(0, c)] = x[c] - 1.0;
            }
        },
    );
    Ok(SparseProblem::new("equality-ball", n, Arc::new(obj), rho)?
        .with_eq(Arc::new(h)))
}

/// `min -x + rho ||x||_0` over `x >= 0`: the one-dimensional problem
/// whose penalized subproblems carry the interior stationary family
/// `(x, y) = (1/alpha)(sqrt(2 rho) - 1/alpha, 1)` for the natural
/// penalty.
pub fn neg_linear(rho: f64) -> Result<SparseProblem, ProblemError> {
    let obj = FnObjective::new(|x| -x[0], |_x, g| g[0] = -1.0);
    SparseProblem::new("neg-linear", 1, Arc::new(obj), rho)
}

/// Separable quadratic `f(x) = sum_i w_i (x_i - t_i)^2` over `x >= 0`.
pub fn separable_quadratic(
    targets: Vec<f64>,
    weights: Option<Vec<f64>>,
    rho: f64,
) -> Result<SparseProblem, ProblemError> {
    let n = targets.len();
    let w = weights.unwrap_or_else(|| vec![1.0; n]);
    if w.len() != n {
        return Err(ProblemError::DimMismatch { expected: n, got: w.len() });
    }
    let (t2, w2) = (targets.clone(), w.clone());
    let obj = FnObjective::new(
        move |x| {
            x.iter()
                .zip(&targets)
                .zip(&w)
                .map(|((xi, ti), wi)| wi * (xi - ti) * (xi - ti))
                .sum()
        },
        move |x, g| {
            for i in 0..x.len() {
                g[i] = 2.0 * w2[i] * (x[i] - t2[i]);
            }
        },
    );
    SparseProblem::new("separable-quadratic", n, Arc::new(obj), rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::enumerate_supports;

    #[test]
    fn linear_ball_global_is_origin() {
        let p = linear_ball(3, 1.0).unwrap();
        let r = enumerate_supports(&p, 14).unwrap();
        assert!(r.best_support.is_empty());
        assert!(r.best_value.abs() <= 1e-9);
    }

    #[test]
    fn separable_quadratic_values() {
        let p = separable_quadratic(vec![2.0], None, 1.0).unwrap();
        assert_eq!(p.f(&[2.0]), 0.0);
        assert_eq!(p.f(&[0.0]), 4.0);
    }
}
