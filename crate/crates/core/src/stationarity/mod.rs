//! Stationarity diagnostics for the sparse problem.
//!
//! All checks work on the tightened view of the problem at a point `x`:
//! masked coordinates inside the zero tolerance are pinned (their
//! multiplier is free), active inequalities contribute sign-constrained
//! rows, and equalities contribute free rows. Active simple bounds and
//! active unit-ball rows of a projection block are treated as inequality
//! rows of the feasible-set description, which is what they are.

mod nnls;
mod simplex;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::la;
use crate::problem::{BlockProjection, SparseProblem, ACTIVE_TOL};
use nnls::nnls_free;
use simplex::{simplex_max, LpOutcome};

#[derive(Debug, Error)]
pub enum StationarityError {
    #[error("point is not stationary enough for a second-order check: residual {0}")]
    NotStationary(f64),
    #[error("dimension mismatch")]
    DimMismatch,
}

/// SP-Lagrangian `L(x, lambda, mu) = f(x) + lambda^T g(x) + mu^T h(x)`;
/// the l0 term and the sign constraints are deliberately absent.
#[derive(Debug, Clone)]
pub struct SpLagrangian {
    pub value: f64,
    pub gradient: Vec<f64>,
}

pub fn sp_lagrangian(
    problem: &SparseProblem,
    x: &[f64],
    lambda: &[f64],
    mu: &[f64],
) -> SpLagrangian {
    let mut grad = vec![0.0; problem.n];
    problem.grad_f(x, &mut grad);
    let mut value = problem.f(x);
    if let Some(jg) = problem.jac_g(x) {
        let g = problem.eval_g(x);
        for i in 0..g.len() {
            value += lambda[i] * g[i];
            if lambda[i] != 0.0 {
                for c in 0..problem.n {
                    grad[c] += lambda[i] * jg[(i, c)];
                }
            }
        }
    }
    if let Some(jh) = problem.jac_h(x) {
        let h = problem.eval_h(x);
        for j in 0..h.len() {
            value += mu[j] * h[j];
            if mu[j] != 0.0 {
                for c in 0..problem.n {
                    grad[c] += mu[j] * jh[(j, c)];
                }
            }
        }
    }
    SpLagrangian { value, gradient: grad }
}

/// Hessian of the SP-Lagrangian by central differences of the analytic
/// gradient, symmetrized.
pub fn sp_lagrangian_hessian(
    problem: &SparseProblem,
    x: &[f64],
    lambda: &[f64],
    mu: &[f64],
) -> DMatrix<f64> {
    let n = problem.n;
    let mut h = DMatrix::zeros(n, n);
    let sqrt_eps = f64::EPSILON.sqrt();
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..n {
        let step = sqrt_eps * (1.0 + x[j].abs());
        xp[j] = x[j] + step;
        xm[j] = x[j] - step;
        let gp = sp_lagrangian(problem, &xp, lambda, mu).gradient;
        let gm = sp_lagrangian(problem, &xm, lambda, mu).gradient;
        for i in 0..n {
            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
    let ht = h.transpose();
    (h + ht) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RowSource {
    Ineq(usize),
    UpperBound(usize),
    LowerBound(usize),
    BallRow(usize),
}

struct ActiveRow {
    grad: Vec<f64>,
    source: RowSource,
}

/// Tightened-problem geometry at `x`.
struct ActiveGeometry {
    pinned: Vec<usize>,
    eq_rows: Vec<Vec<f64>>,
    ineq_rows: Vec<ActiveRow>,
}

fn ball_rows(problem: &SparseProblem, x: &[f64]) -> Vec<(usize, Vec<f64>)> {
    let Some(BlockProjection::UnitBallRows { offset, rows, cols }) = &problem.proj else {
        return Vec::new();
    };
    let (offset, rows, cols) = (*offset, *rows, *cols);
    let mut out = Vec::new();
    for r in 0..rows {
        let row = &x[offset + r * cols..offset + (r + 1) * cols];
        if la::dot(row, row) >= 1.0 - ACTIVE_TOL {
            let mut grad = vec![0.0; problem.n];
            for c in 0..cols {
                grad[offset + r * cols + c] = 2.0 * row[c];
            }
            out.push((r, grad));
        }
    }
    out
}

fn active_geometry(problem: &SparseProblem, x: &[f64], zero_tol: f64) -> ActiveGeometry {
    let n = problem.n;
    let in_block = |i: usize| {
        problem
            .proj
            .as_ref()
            .map(BlockProjection::coords)
            .is_some_and(|r| r.contains(&i))
    };
    let pinned: Vec<usize> = (0..n)
        .filter(|&i| problem.l0_mask[i] && x[i].abs() <= zero_tol)
        .collect();
    let is_pinned = |i: usize| problem.l0_mask[i] && x[i].abs() <= zero_tol;

    let mut eq_rows = Vec::new();
    if let Some(jh) = problem.jac_h(x) {
        for j in 0..jh.nrows() {
            eq_rows.push((0..n).map(|c| jh[(j, c)]).collect());
        }
    }

    let mut ineq_rows = Vec::new();
    if let Some(jg) = problem.jac_g(x) {
        let g = problem.eval_g(x);
        for i in 0..g.len() {
            if g[i] >= -ACTIVE_TOL {
                ineq_rows.push(ActiveRow {
                    grad: (0..n).map(|c| jg[(i, c)]).collect(),
                    source: RowSource::Ineq(i),
                });
            }
        }
    }
    for i in 0..n {
        if in_block(i) || is_pinned(i) {
            continue;
        }
        if problem.upper[i].is_finite() && x[i] >= problem.upper[i] - ACTIVE_TOL {
            let mut grad = vec![0.0; n];
            grad[i] = 1.0;
            ineq_rows.push(ActiveRow { grad, source: RowSource::UpperBound(i) });
        }
        if !problem.l0_mask[i] && x[i] <= problem.lower[i].max(0.0) + ACTIVE_TOL {
            let mut grad = vec![0.0; n];
            grad[i] = -1.0;
            ineq_rows.push(ActiveRow { grad, source: RowSource::LowerBound(i) });
        }
    }
    for (r, grad) in ball_rows(problem, x) {
        ineq_rows.push(ActiveRow { grad, source: RowSource::BallRow(r) });
    }
    ActiveGeometry { pinned, eq_rows, ineq_rows }
}

/// Stationarity defect of `grad` over the non-pinned coordinates after
/// compensating active bounds and ball rows with their best admissible
/// multipliers (bounds act on single coordinates, ball rows on disjoint
/// blocks, so the compensation is exact and closed-form).
fn compensated_defect(problem: &SparseProblem, x: &[f64], grad: &[f64], zero_tol: f64) -> f64 {
    let n = problem.n;
    let in_block = |i: usize| {
        problem
            .proj
            .as_ref()
            .map(BlockProjection::coords)
            .is_some_and(|r| r.contains(&i))
    };
    let mut defect = 0.0f64;
    for i in 0..n {
        if in_block(i) || (problem.l0_mask[i] && x[i].abs() <= zero_tol) {
            continue;
        }
        let upper_active = problem.upper[i].is_finite() && x[i] >= problem.upper[i] - ACTIVE_TOL;
        let lower_active = !problem.l0_mask[i] && x[i] <= problem.lower[i].max(0.0) + ACTIVE_TOL;
        let d = if upper_active && lower_active {
            0.0
        } else if upper_active {
            grad[i].max(0.0)
        } else if lower_active {
            grad[i].min(0.0)
        } else {
            grad[i]
        };
        defect = defect.max(d.abs());
    }
    if let Some(BlockProjection::UnitBallRows { offset, rows, cols }) = &problem.proj {
        let (offset, rows, cols) = (*offset, *rows, *cols);
        for r in 0..rows {
            let range = offset + r * cols..offset + (r + 1) * cols;
            let row = &x[range.clone()];
            let gvec = &grad[range];
            if la::dot(row, row) >= 1.0 - ACTIVE_TOL {
                let d = la::dot(row, row);
                let gamma = if d > 0.0 { (-la::dot(gvec, row) / (2.0 * d)).max(0.0) } else { 0.0 };
                for (k, &gk) in gvec.iter().enumerate() {
                    defect = defect.max((gk + gamma * 2.0 * row[k]).abs());
                }
            } else {
                defect = defect.max(la::norm_inf(gvec));
            }
        }
    }
    defect
}

/// S-stationarity residual at a point with supplied multipliers: the max
/// of the compensated SP-Lagrangian gradient off the zero set,
/// `||h||_inf`, `max_i |min(-g_i, lambda_i)|`, and sign violations.
pub fn s_residual(
    problem: &SparseProblem,
    x: &[f64],
    lambda: &[f64],
    mu: &[f64],
    zero_tol: f64,
) -> f64 {
    let lag = sp_lagrangian(problem, x, lambda, mu);
    let mut r = compensated_defect(problem, x, &lag.gradient, zero_tol);
    let g = problem.eval_g(x);
    for i in 0..g.len() {
        r = r.max((-g[i]).min(lambda[i]).abs());
        r = r.max(-lambda[i]);
        r = r.max(g[i]);
    }
    r = r.max(la::norm_inf(&problem.eval_h(x)));
    r
}

/// Result of minimizing the S-stationarity defect over all admissible
/// multipliers.
#[derive(Debug, Clone)]
pub struct BestMultipliers {
    pub residual: f64,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Minimizes `||[grad f + Jg^T lambda + Jh^T mu + bound/ball terms]_i||`
/// over `lambda >= 0` on the active set and free `mu`, dropping the
/// pinned coordinates. Zero rows (degenerate constraint gradients) are
/// handled by the pseudo-inverse inside the solver.
pub fn best_multiplier_residual(
    problem: &SparseProblem,
    x: &[f64],
    zero_tol: f64,
) -> BestMultipliers {
    let n = problem.n;
    let geo = active_geometry(problem, x, zero_tol);
    let rows: Vec<usize> = (0..n).filter(|i| !geo.pinned.contains(i)).collect();

    let mut grad_f = vec![0.0; n];
    problem.grad_f(x, &mut grad_f);

    let ncols = geo.eq_rows.len() + geo.ineq_rows.len();
    let mut mat = DMatrix::zeros(rows.len(), ncols);
    let mut nonneg = vec![false; ncols];
    for (cidx, row) in geo.eq_rows.iter().enumerate() {
        for (ridx, &coord) in rows.iter().enumerate() {
            mat[(ridx, cidx)] = row[coord];
        }
    }
    for (k, arow) in geo.ineq_rows.iter().enumerate() {
        let cidx = geo.eq_rows.len() + k;
        nonneg[cidx] = true;
        for (ridx, &coord) in rows.iter().enumerate() {
            mat[(ridx, cidx)] = arow.grad[coord];
        }
    }
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|&i| -grad_f[i]));
    let z = if ncols > 0 { nnls_free(&mat, &b, &nonneg) } else { DVector::zeros(0) };

    let defect = if ncols > 0 { &mat * &z - &b } else { -b.clone() };
    let residual = defect.amax();

    let mut lambda = vec![0.0; problem.m()];
    let mut mu = vec![0.0; problem.p()];
    for (j, v) in geo.eq_rows.iter().enumerate() {
        let _ = v;
        mu[j] = z[j];
    }
    for (k, arow) in geo.ineq_rows.iter().enumerate() {
        if let RowSource::Ineq(i) = arow.source {
            lambda[i] = z[geo.eq_rows.len() + k];
        }
    }
    BestMultipliers { residual, lambda, mu }
}

/// Indices where both `x_i` and its auxiliary partner vanish. `x` and
/// `y` must have equal length (the full-mask form).
pub fn biactive(x: &[f64], y: &[f64], zero_tol: f64) -> Vec<usize> {
    assert_eq!(x.len(), y.len());
    (0..x.len())
        .filter(|&i| x[i].abs() <= zero_tol && y[i].abs() <= zero_tol)
        .collect()
}

/// Masked variant: `y` lives on the masked coordinates; returned indices
/// are original coordinates.
pub fn biactive_masked(
    problem: &SparseProblem,
    x: &[f64],
    y: &[f64],
    zero_tol: f64,
) -> Vec<usize> {
    problem
        .masked_indices()
        .into_iter()
        .zip(y)
        .filter(|&(i, &yk)| x[i].abs() <= zero_tol && yk.abs() <= zero_tol)
        .map(|(i, _)| i)
        .collect()
}

fn stacked_rank_ok(rows: &[Vec<f64>], n: usize) -> bool {
    if rows.is_empty() {
        return true;
    }
    if rows.len() > n {
        return false;
    }
    let m = DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c]);
    let svd = m.svd(false, false);
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return false;
    }
    let smin = svd.singular_values[svd.singular_values.len() - 1];
    smin > 1e-10 * smax
}

/// SP-LICQ: the active inequality gradients, all equality gradients and
/// the pinned unit vectors are linearly independent.
pub fn check_sp_licq(problem: &SparseProblem, x: &[f64], zero_tol: f64) -> bool {
    let geo = active_geometry(problem, x, zero_tol);
    let mut rows: Vec<Vec<f64>> = geo.eq_rows.clone();
    rows.extend(geo.ineq_rows.iter().map(|r| r.grad.clone()));
    for &i in &geo.pinned {
        let mut e = vec![0.0; problem.n];
        e[i] = 1.0;
        rows.push(e);
    }
    stacked_rank_ok(&rows, problem.n)
}

/// SP-MFCQ: equality gradients plus pinned unit vectors independent, and
/// a direction `d` with `grad g_i^T d < 0` on the active inequalities,
/// `grad h^T d = 0`, `d = 0` on the pinned set. The direction search is
/// the linear program `max t` over `||d||_inf <= 1`; an empty active
/// inequality family reduces to the rank condition. `None` means the LP
/// did not resolve.
pub fn check_sp_mfcq(problem: &SparseProblem, x: &[f64], zero_tol: f64) -> Option<bool> {
    let n = problem.n;
    let geo = active_geometry(problem, x, zero_tol);
    let mut rank_rows = geo.eq_rows.clone();
    for &i in &geo.pinned {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        rank_rows.push(e);
    }
    if !stacked_rank_ok(&rank_rows, n) {
        return Some(false);
    }
    if geo.ineq_rows.is_empty() {
        return Some(true);
    }

    // Free coordinates of the direction variable.
    let free: Vec<usize> = (0..n).filter(|i| !geo.pinned.contains(i)).collect();
    let nf = free.len();
    let mi = geo.ineq_rows.len();
    let pe = geo.eq_rows.len();
    let t_cap = 1.0
        + geo
            .ineq_rows
            .iter()
            .map(|r| r.grad.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0f64, f64::max);

    // Standard-form variables:
    // [d+ (nf) | d- (nf) | t+ | t- | s_ineq (mi) | box+ (nf) | box- (nf) | s_tcap]
    let ncols = 2 * nf + 2 + mi + 2 * nf + 1;
    let nrows = mi + pe + 2 * nf + 1;
    let mut a = DMatrix::zeros(nrows, ncols);
    let mut b = vec![0.0; nrows];
    let col_dplus = 0;
    let col_dminus = nf;
    let col_tplus = 2 * nf;
    let col_tminus = 2 * nf + 1;
    let col_slack = 2 * nf + 2;
    let col_boxp = col_slack + mi;
    let col_boxm = col_boxp + nf;
    let col_tcap = col_boxm + nf;

    for (r, arow) in geo.ineq_rows.iter().enumerate() {
        for (k, &coord) in free.iter().enumerate() {
            a[(r, col_dplus + k)] = arow.grad[coord];
            a[(r, col_dminus + k)] = -arow.grad[coord];
        }
        a[(r, col_tplus)] = 1.0;
        a[(r, col_tminus)] = -1.0;
        a[(r, col_slack + r)] = 1.0;
        b[r] = 0.0;
    }
    for (j, hrow) in geo.eq_rows.iter().enumerate() {
        let r = mi + j;
        for (k, &coord) in free.iter().enumerate() {
            a[(r, col_dplus + k)] = hrow[coord];
            a[(r, col_dminus + k)] = -hrow[coord];
        }
        b[r] = 0.0;
    }
    for k in 0..nf {
        let r = mi + pe + k;
        a[(r, col_dplus + k)] = 1.0;
        a[(r, col_boxp + k)] = 1.0;
        b[r] = 1.0;
        let r2 = mi + pe + nf + k;
        a[(r2, col_dminus + k)] = 1.0;
        a[(r2, col_boxm + k)] = 1.0;
        b[r2] = 1.0;
    }
    let r_cap = mi + pe + 2 * nf;
    a[(r_cap, col_tplus)] = 1.0;
    a[(r_cap, col_tcap)] = 1.0;
    b[r_cap] = t_cap;

    let mut c = vec![0.0; ncols];
    c[col_tplus] = 1.0;
    c[col_tminus] = -1.0;

    match simplex_max(&c, &a, &b, 50 * (nrows + ncols)) {
        LpOutcome::Optimal { value, .. } => Some(value > 1e-10),
        LpOutcome::Unbounded => Some(true),
        LpOutcome::Infeasible => Some(false),
        LpOutcome::IterLimit => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sosc {
    Holds,
    Fails,
    Inconclusive,
}

/// Row description of the SP-critical cone at a stationary point:
/// directions orthogonal to the equality rows and the strongly active
/// inequality rows, on the nonpositive side of the weakly active rows,
/// and pinned to zero on the zero set of the masked block.
#[derive(Debug, Clone)]
pub struct CriticalCone {
    pub eq_rows: Vec<Vec<f64>>,
    /// Active inequality rows with a positive (implied) multiplier.
    pub strong_rows: Vec<Vec<f64>>,
    /// Active inequality rows whose multiplier vanishes.
    pub weak_rows: Vec<Vec<f64>>,
    pub pinned: Vec<usize>,
}

/// Builds the cone description at `(x, lambda)`. Strong-versus-weak
/// activity of bound and ball rows is decided by the multiplier implied
/// by the SP-Lagrangian gradient.
pub fn critical_cone(
    problem: &SparseProblem,
    x: &[f64],
    lambda: &[f64],
    mu: &[f64],
    zero_tol: f64,
) -> CriticalCone {
    const STRICT: f64 = 1e-8;
    let geo = active_geometry(problem, x, zero_tol);
    let lag = sp_lagrangian(problem, x, lambda, mu);
    let mut strong_rows = Vec::new();
    let mut weak_rows = Vec::new();
    for arow in &geo.ineq_rows {
        let implied = match arow.source {
            RowSource::Ineq(i) => lambda[i],
            RowSource::UpperBound(i) => -lag.gradient[i],
            RowSource::LowerBound(i) => lag.gradient[i],
            RowSource::BallRow(_) => {
                let d = la::dot(&arow.grad, &arow.grad);
                if d > 0.0 {
                    (-la::dot(&lag.gradient, &arow.grad) / d).max(0.0)
                } else {
                    0.0
                }
            }
        };
        if implied > STRICT {
            strong_rows.push(arow.grad.clone());
        } else {
            weak_rows.push(arow.grad.clone());
        }
    }
    CriticalCone { eq_rows: geo.eq_rows, strong_rows, weak_rows, pinned: geo.pinned }
}

/// SP-SOSC over the SP-critical cone. Under strict complementarity the
/// cone is the nullspace of the stacked strongly-active rows and the
/// check is an eigenvalue test of the reduced Hessian; with weakly
/// active rows present, 1000 sampled cone directions look for negative
/// curvature.
pub fn check_sp_sosc(
    problem: &SparseProblem,
    x: &[f64],
    lambda: &[f64],
    mu: &[f64],
    zero_tol: f64,
) -> Result<Sosc, StationarityError> {
    let res = s_residual(problem, x, lambda, mu, zero_tol);
    if res > 1e-6 {
        return Err(StationarityError::NotStationary(res));
    }
    let n = problem.n;
    let cone = critical_cone(problem, x, lambda, mu, zero_tol);

    let mut strong: Vec<Vec<f64>> = cone.eq_rows.clone();
    for &i in &cone.pinned {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        strong.push(e);
    }
    strong.extend(cone.strong_rows.iter().cloned());
    let weak = cone.weak_rows;

    // Orthonormal basis of the nullspace of the strong rows, via the
    // eigendecomposition of A^T A (robust for wide or rank-deficient A).
    let basis = if strong.is_empty() {
        DMatrix::identity(n, n)
    } else {
        let m = DMatrix::from_fn(strong.len(), n, |r, c| strong[r][c]);
        let ata = m.transpose() * &m;
        let eig = ata.symmetric_eigen();
        let emax = eig.eigenvalues.max();
        let thresh = 1e-16 * emax.max(1.0);
        let null_cols: Vec<usize> =
            (0..n).filter(|&i| eig.eigenvalues[i] <= thresh).collect();
        let mut z = DMatrix::zeros(n, null_cols.len());
        for (c, &i) in null_cols.iter().enumerate() {
            for r in 0..n {
                z[(r, c)] = eig.eigenvectors[(r, i)];
            }
        }
        z
    };

    if basis.ncols() == 0 {
        return Ok(Sosc::Holds);
    }

    let hess = sp_lagrangian_hessian(problem, x, lambda, mu);
    let reduced = basis.transpose() * &hess * &basis;
    let sym = (reduced.clone() + reduced.transpose()) * 0.5;
    let min_eig = sym.symmetric_eigen().eigenvalues.min();
    if weak.is_empty() {
        if min_eig > 1e-10 {
            Ok(Sosc::Holds)
        } else if min_eig < -1e-10 {
            Ok(Sosc::Fails)
        } else {
            Ok(Sosc::Inconclusive)
        }
    } else if min_eig > 1e-10 {
        // The cone sits inside the span of `basis`; positive curvature on
        // the whole span is sufficient no matter how the weakly active
        // rows cut it.
        Ok(Sosc::Holds)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5052_4f4a);
        let q = basis.ncols();
        for _ in 0..1000 {
            let u: Vec<f64> = (0..q).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let mut d = vec![0.0; n];
            for i in 0..n {
                for k in 0..q {
                    d[i] += basis[(i, k)] * u[k];
                }
            }
            let nrm = la::norm2(&d);
            if nrm < 1e-12 {
                continue;
            }
            for v in d.iter_mut() {
                *v /= nrm;
            }
            let ok_pos = weak.iter().all(|w| la::dot(w, &d) <= 1e-12);
            let ok_neg = weak.iter().all(|w| -la::dot(w, &d) <= 1e-12);
            let dir: Option<Vec<f64>> = if ok_pos {
                Some(d.clone())
            } else if ok_neg {
                Some(d.iter().map(|v| -v).collect())
            } else {
                None
            };
            if let Some(d) = dir {
                let hd = &hess * DVector::from_column_slice(&d);
                let curv = la::dot(&d, hd.as_slice());
                if curv < -1e-10 {
                    return Ok(Sosc::Fails);
                }
            }
        }
        Ok(Sosc::Inconclusive)
    }
}

/// One iterate of a sequential-stationarity certificate.
pub type AsIterate = (Vec<f64>, Vec<f64>, Vec<f64>);

#[derive(Debug, Clone, serde::Serialize)]
pub struct AsTrace {
    pub residuals: Vec<f64>,
    pub consistent: bool,
}

/// Approximate-S-stationarity residuals along a multiplier sequence.
/// Per iterate: the SP-Lagrangian gradient off the final support, the
/// inequality complementarity measure, `||h||_inf`, and the distance to
/// the final point. The verdict asks the last iterate to fall below
/// `tol`.
pub fn as_trace(
    problem: &SparseProblem,
    iterates: &[AsIterate],
    zero_tol: f64,
    tol: f64,
) -> AsTrace {
    assert!(!iterates.is_empty(), "empty iterate sequence");
    let (x_final, _, _) = iterates.last().unwrap();
    let off_support: Vec<usize> = (0..problem.n)
        .filter(|&i| !(problem.l0_mask[i] && x_final[i].abs() <= zero_tol))
        .collect();
    let residuals: Vec<f64> = iterates
        .iter()
        .map(|(x, lambda, mu)| {
            let lag = sp_lagrangian(problem, x, lambda, mu);
            let mut r = off_support
                .iter()
                .fold(0.0f64, |m, &i| m.max(lag.gradient[i].abs()));
            let g = problem.eval_g(x);
            for i in 0..g.len() {
                r = r.max((-g[i]).min(lambda[i]).abs());
            }
            r = r.max(la::norm_inf(&problem.eval_h(x)));
            let dist = x
                .iter()
                .zip(x_final)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            r.max(dist)
        })
        .collect();
    let consistent = *residuals.last().unwrap() <= tol;
    AsTrace { residuals, consistent }
}
