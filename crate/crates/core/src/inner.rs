//! Inexact inner solver for the penalized subproblems.
//!
//! A spectral projected gradient (SPG) method with a safeguarded
//! Barzilai-Borwein step and a nonmonotone line search handles the box
//! and sign constraints by projection. Equality and general inequality
//! constraints are wrapped in an augmented Lagrangian (ALM) loop with
//! safeguarded multiplier updates; when a problem has neither, the ALM
//! layer is bypassed and SPG runs alone.
//!
//! The accepted iterate of [`alm_solve`] satisfies the six inexact-KKT
//! conditions of the outer penalty loop at the requested accuracy, with
//! the bound multipliers read off the final gradient on the active box
//! faces.

use thiserror::Error;

use crate::la;
use crate::outer::KktResiduals;
use crate::problem::{BlockProjection, ConstraintBlock, PenalizedSubproblem};

#[derive(Debug, Error, PartialEq)]
pub enum InnerError {
    #[error("box is empty at coordinate {0}: lower exceeds upper")]
    EmptyBox(usize),
    #[error("dimension mismatch")]
    DimMismatch,
}

/// Componentwise clamp onto `[lo, hi]`; idempotent.
pub fn project_box(v: &[f64], lo: &[f64], hi: &[f64]) -> Result<Vec<f64>, InnerError> {
    if v.len() != lo.len() || v.len() != hi.len() {
        return Err(InnerError::DimMismatch);
    }
    if let Some(i) = (0..v.len()).find(|&i| lo[i] > hi[i]) {
        return Err(InnerError::EmptyBox(i));
    }
    Ok(v.iter().enumerate().map(|(i, &t)| t.clamp(lo[i], hi[i])).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpgStatus {
    Converged,
    IterLimit,
    Stalled,
}

#[derive(Debug, Clone)]
pub struct SpgResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub pg_residual: f64,
    pub iters: usize,
    pub status: SpgStatus,
}

const BB_MIN: f64 = 1e-10;
const BB_MAX: f64 = 1e10;
const LS_MEMORY: usize = 10;
const LS_GAMMA: f64 = 1e-4;
const LS_MAX_BACKTRACKS: usize = 60;

/// Spectral projected gradient on `min F(x)` over a closed convex set
/// given by its projection. Stops when the projected-gradient residual
/// `||P(x - grad F(x)) - x||_inf` drops to `tol`. The returned objective
/// never exceeds the value at the (projected) start; a non-finite value
/// met during the line search returns the best point seen so far.
pub fn spg_solve(
    value_grad: &mut dyn FnMut(&[f64], &mut [f64]) -> f64,
    project: &dyn Fn(&mut [f64]),
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> SpgResult {
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x);
    let mut grad = vec![0.0; n];
    let mut fx = value_grad(&x, &mut grad);

    let mut best_x = x.clone();
    let mut best_f = fx;
    let mut history = std::collections::VecDeque::with_capacity(LS_MEMORY);
    history.push_back(fx);

    let pg = |x: &[f64], grad: &[f64]| -> (Vec<f64>, f64) {
        let mut step: Vec<f64> = x.iter().zip(grad).map(|(xi, gi)| xi - gi).collect();
        project(&mut step);
        for i in 0..n {
            step[i] -= x[i];
        }
        let nrm = la::norm_inf(&step);
        (step, nrm)
    };

    let (_, mut pg_norm) = pg(&x, &grad);
    if !fx.is_finite() {
        return SpgResult { x, value: fx, pg_residual: pg_norm, iters: 0, status: SpgStatus::Stalled };
    }
    let mut bb = if pg_norm > 0.0 { (1.0 / pg_norm).clamp(BB_MIN, BB_MAX) } else { 1.0 };

    let mut trial = vec![0.0; n];
    let mut grad_new = vec![0.0; n];
    for iter in 0..max_iter {
        if pg_norm <= tol {
            return SpgResult {
                x,
                value: fx,
                pg_residual: pg_norm,
                iters: iter,
                status: SpgStatus::Converged,
            };
        }

        // Spectral direction d = P(x - bb * grad) - x.
        let mut d: Vec<f64> = (0..n).map(|i| x[i] - bb * grad[i]).collect();
        project(&mut d);
        for i in 0..n {
            d[i] -= x[i];
        }
        let mut gd = la::dot(&grad, &d);
        if gd >= 0.0 || !gd.is_finite() {
            // Degenerate spectral step; fall back to the unit projected
            // gradient direction.
            let (step, _) = pg(&x, &grad);
            d = step;
            gd = la::dot(&grad, &d);
            if gd >= 0.0 {
                return SpgResult {
                    x,
                    value: fx,
                    pg_residual: pg_norm,
                    iters: iter,
                    status: SpgStatus::Stalled,
                };
            }
        }

        let fmax = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut t = 1.0;
        let mut accepted = false;
        let mut ft = f64::INFINITY;
        for _ in 0..LS_MAX_BACKTRACKS {
            for i in 0..n {
                trial[i] = x[i] + t * d[i];
            }
            ft = value_grad(&trial, &mut grad_new);
            if ft.is_finite() && ft <= fmax + LS_GAMMA * t * gd {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Either the objective went non-finite or no decrease was
            // possible at the smallest step.
            let status =
                if ft.is_finite() { SpgStatus::IterLimit } else { SpgStatus::Stalled };
            return SpgResult {
                x: best_x,
                value: best_f,
                pg_residual: pg_norm,
                iters: iter,
                status,
            };
        }

        // Barzilai-Borwein scale from the accepted step.
        let mut sts = 0.0;
        let mut sty = 0.0;
        for i in 0..n {
            let s = trial[i] - x[i];
            sts += s * s;
            sty += s * (grad_new[i] - grad[i]);
        }
        bb = if sty > 0.0 { (sts / sty).clamp(BB_MIN, BB_MAX) } else { BB_MAX };

        x.copy_from_slice(&trial);
        grad.copy_from_slice(&grad_new);
        fx = ft;
        if history.len() == LS_MEMORY {
            history.pop_front();
        }
        history.push_back(fx);
        if fx < best_f {
            best_f = fx;
            best_x.copy_from_slice(&x);
        }
        let (_, nrm) = pg(&x, &grad);
        pg_norm = nrm;
    }
    SpgResult { x, value: fx, pg_residual: pg_norm, iters: max_iter, status: SpgStatus::IterLimit }
}

/// Bound multipliers read off a gradient on the tau-active box faces:
/// `nu_i = max(0, grad_i)` on a lower-active coordinate,
/// `nu_i = max(0, -grad_i)` on an upper-active one, zero elsewhere.
pub fn extract_bound_multipliers(
    x: &[f64],
    grad: &[f64],
    lo: &[f64],
    hi: &[f64],
    tau: f64,
) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let lower_active = x[i] <= lo[i] + tau;
            let upper_active = x[i] >= hi[i] - tau;
            if lower_active && upper_active {
                grad[i].abs()
            } else if lower_active {
                grad[i].max(0.0)
            } else if upper_active {
                (-grad[i]).max(0.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// Per-coordinate stationarity defect `grad_i - B nu_i` under the same
/// activity rule as [`extract_bound_multipliers`].
pub(crate) fn bound_stat_defect(
    x: &[f64],
    grad: &[f64],
    lo: &[f64],
    hi: &[f64],
    tau: f64,
) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let lower_active = x[i] <= lo[i] + tau;
            let upper_active = x[i] >= hi[i] - tau;
            if lower_active && upper_active {
                0.0
            } else if lower_active {
                grad[i].min(0.0)
            } else if upper_active {
                grad[i].max(0.0)
            } else {
                grad[i]
            }
        })
        .collect()
}

/// Complementarity defect `min(distance to the attached bound, nu_i)`.
pub(crate) fn bound_comp_defect(
    x: &[f64],
    nu: &[f64],
    lo: &[f64],
    hi: &[f64],
    tau: f64,
) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            if nu[i] == 0.0 {
                0.0
            } else if x[i] <= lo[i] + tau {
                (x[i] - lo[i]).min(nu[i]).max(0.0)
            } else {
                (hi[i] - x[i]).min(nu[i]).max(0.0)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerStatus {
    Converged,
    IterLimit,
    Stalled,
    Infeasible,
}

/// Inner-solver output: primal point, multiplier estimates for every
/// constraint class, and the six step-2 residuals at that tuple.
#[derive(Debug, Clone)]
pub struct InnerResult {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub nu_x: Vec<f64>,
    pub nu_y: Vec<f64>,
    pub residuals: KktResiduals,
    /// Multiplier-free projection residuals `(r_x, r_y)` at the same point.
    pub free_residuals: (f64, f64),
    pub pg_residual: f64,
    pub inner_iters: usize,
    pub status: InnerStatus,
}

/// Augmented Lagrangian controls with conservative defaults: safeguarded
/// multipliers, tenfold penalty growth on stalled feasibility, and an
/// absolute feasibility target tighter than the stationarity one.
#[derive(Debug, Clone)]
pub struct AlmConfig {
    pub initial_penalty: f64,
    pub lambda_max: f64,
    pub mu_abs_max: f64,
    pub penalty_growth: f64,
    pub infeas_shrink: f64,
    pub max_alm_iters: usize,
    pub spg_max_iters: usize,
    pub spg_tol_factor: f64,
    pub spg_tol_floor: f64,
    pub penalty_cap: f64,
    /// Absolute feasibility target for `h` and positive parts of `g`.
    pub feas_tol: f64,
}

impl Default for AlmConfig {
    fn default() -> Self {
        Self {
            initial_penalty: 10.0,
            lambda_max: 1e12,
            mu_abs_max: 1e12,
            penalty_growth: 10.0,
            infeas_shrink: 0.5,
            max_alm_iters: 60,
            spg_max_iters: 10_000,
            spg_tol_factor: 0.1,
            spg_tol_floor: 1e-10,
            penalty_cap: 1e8,
            feas_tol: 1e-8,
        }
    }
}

/// A plain smooth NLP fed to the ALM loop: objective closure, optional
/// constraint blocks over the full variable vector, and a projection for
/// whatever the box-and-block part is.
pub(crate) struct AlmProblem<'a> {
    pub n: usize,
    pub g: Option<&'a dyn ConstraintBlock>,
    pub h: Option<&'a dyn ConstraintBlock>,
}

pub(crate) struct AlmOutcome {
    pub z: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub pg_residual: f64,
    pub iters: usize,
    pub status: InnerStatus,
    /// Final penalty parameter, reusable as a warm start.
    pub penalty: f64,
}

/// Generic safeguarded ALM driver. `stop_check` decides acceptance from
/// the candidate `(z, lambda, mu)`; its tolerance bookkeeping belongs to
/// the caller.
pub(crate) fn alm_minimize(
    nlp: &AlmProblem<'_>,
    objective: &mut dyn FnMut(&[f64], &mut [f64]) -> f64,
    project: &dyn Fn(&mut [f64]),
    z0: &[f64],
    lambda0: &[f64],
    mu0: &[f64],
    eps: f64,
    cfg: &AlmConfig,
    stop_check: &mut dyn FnMut(&[f64], &[f64], &[f64]) -> bool,
) -> AlmOutcome {
    let n = nlp.n;
    let m = nlp.g.map_or(0, |g| g.dim());
    let p = nlp.h.map_or(0, |h| h.dim());
    let spg_tol = (cfg.spg_tol_factor * eps).max(cfg.spg_tol_floor);

    let mut z = z0.to_vec();
    project(&mut z);

    // Bound-constrained case: SPG alone with a tightening tolerance until
    // the caller's test accepts.
    if m == 0 && p == 0 {
        let mut iters = 0;
        let mut tol = spg_tol.min(eps * 0.5).max(cfg.spg_tol_floor);
        let mut last = SpgResult {
            x: z.clone(),
            value: f64::INFINITY,
            pg_residual: f64::INFINITY,
            iters: 0,
            status: SpgStatus::IterLimit,
        };
        for _ in 0..3 {
            last = spg_solve(objective, project, &z, tol, cfg.spg_max_iters);
            iters += last.iters;
            z = last.x.clone();
            if stop_check(&z, &[], &[]) {
                return AlmOutcome {
                    z,
                    lambda: Vec::new(),
                    mu: Vec::new(),
                    pg_residual: last.pg_residual,
                    iters,
                    status: InnerStatus::Converged,
                    penalty: cfg.initial_penalty,
                };
            }
            if last.status == SpgStatus::Stalled {
                break;
            }
            tol = (tol * 0.01).max(cfg.spg_tol_floor);
        }
        let status = match last.status {
            SpgStatus::Stalled => InnerStatus::Stalled,
            _ => InnerStatus::IterLimit,
        };
        return AlmOutcome {
            z,
            lambda: Vec::new(),
            mu: Vec::new(),
            pg_residual: last.pg_residual,
            iters,
            status,
            penalty: cfg.initial_penalty,
        };
    }

    let mut lambda = lambda0.to_vec();
    lambda.resize(m, 0.0);
    for l in lambda.iter_mut() {
        *l = l.clamp(0.0, cfg.lambda_max);
    }
    let mut mu = mu0.to_vec();
    mu.resize(p, 0.0);
    for v in mu.iter_mut() {
        *v = v.clamp(-cfg.mu_abs_max, cfg.mu_abs_max);
    }

    let mut c = cfg.initial_penalty;
    let mut gval = vec![0.0; m];
    let mut hval = vec![0.0; p];
    let mut jg = nalgebra::DMatrix::zeros(m, n);
    let mut jh = nalgebra::DMatrix::zeros(p, n);
    let mut prev_infeas = f64::INFINITY;
    let mut best_infeas = f64::INFINITY;
    let mut stagnant_rounds = 0usize;
    let mut total_iters = 0usize;
    let mut pg_res = f64::INFINITY;
    let mut last_status = SpgStatus::IterLimit;

    // A warm start may already pass the caller's test.
    {
        if let Some(g) = nlp.g {
            g.eval(&z, &mut gval);
        }
        if let Some(h) = nlp.h {
            h.eval(&z, &mut hval);
        }
        let lam0: Vec<f64> =
            (0..m).map(|i| (lambda[i] + c * gval[i]).clamp(0.0, cfg.lambda_max)).collect();
        let mu0c: Vec<f64> =
            (0..p).map(|j| (mu[j] + c * hval[j]).clamp(-cfg.mu_abs_max, cfg.mu_abs_max)).collect();
        if stop_check(&z, &lam0, &mu0c) {
            return AlmOutcome {
                z,
                lambda: lam0,
                mu: mu0c,
                pg_residual: 0.0,
                iters: 0,
                status: InnerStatus::Converged,
                penalty: c,
            };
        }
    }

    for _ in 0..cfg.max_alm_iters {
        // Augmented Lagrangian value and gradient at fixed (lambda, mu, c).
        let mut aug = |zz: &[f64], grad: &mut [f64]| -> f64 {
            let mut val = objective(zz, grad);
            if let Some(g) = nlp.g {
                g.eval(zz, &mut gval);
                g.jacobian(zz, &mut jg);
                for i in 0..m {
                    let t = lambda[i] + c * gval[i];
                    if t > 0.0 {
                        val += (t * t - lambda[i] * lambda[i]) / (2.0 * c);
                        for col in 0..n {
                            grad[col] += t * jg[(i, col)];
                        }
                    } else {
                        val -= lambda[i] * lambda[i] / (2.0 * c);
                    }
                }
            }
            if let Some(h) = nlp.h {
                h.eval(zz, &mut hval);
                h.jacobian(zz, &mut jh);
                for j in 0..p {
                    val += mu[j] * hval[j] + 0.5 * c * hval[j] * hval[j];
                    let t = mu[j] + c * hval[j];
                    for col in 0..n {
                        grad[col] += t * jh[(j, col)];
                    }
                }
            }
            val
        };

        // Loose subproblem solves while far from feasible, tightening to
        // the target tolerance as the multipliers settle.
        let round_tol = (0.3 * prev_infeas).clamp(spg_tol, 1e-2f64.max(spg_tol));
        let res = spg_solve(&mut aug, project, &z, round_tol, cfg.spg_max_iters);
        total_iters += res.iters;
        pg_res = res.pg_residual;
        last_status = res.status;
        z = res.x;

        if let Some(g) = nlp.g {
            g.eval(&z, &mut gval);
        }
        if let Some(h) = nlp.h {
            h.eval(&z, &mut hval);
        }
        let lambda_new: Vec<f64> =
            (0..m).map(|i| (lambda[i] + c * gval[i]).clamp(0.0, cfg.lambda_max)).collect();
        let mu_new: Vec<f64> =
            (0..p).map(|j| (mu[j] + c * hval[j]).clamp(-cfg.mu_abs_max, cfg.mu_abs_max)).collect();

        if stop_check(&z, &lambda_new, &mu_new) {
            return AlmOutcome {
                z,
                lambda: lambda_new,
                mu: mu_new,
                pg_residual: pg_res,
                iters: total_iters,
                status: InnerStatus::Converged,
                penalty: c,
            };
        }

        // Progress measure: plain feasibility plus multiplier
        // complementarity on the inequalities.
        let mut infeas = la::norm_inf(&hval);
        for i in 0..m {
            infeas = infeas.max((-gval[i]).min(lambda_new[i]).abs());
        }
        if infeas > cfg.infeas_shrink * prev_infeas {
            c *= cfg.penalty_growth;
        }
        prev_infeas = infeas;
        lambda = lambda_new;
        mu = mu_new;

        // An infeasible restriction shows up as a stalled infeasibility
        // measure under a large penalty; bail out before the penalty cap.
        let plain = la::norm_inf(&hval)
            .max(gval.iter().fold(0.0f64, |mm, &v| mm.max(v.max(0.0))));
        if c >= 1e5 && plain > 0.99 * best_infeas && plain > eps.max(cfg.feas_tol) {
            stagnant_rounds += 1;
        } else {
            stagnant_rounds = 0;
        }
        best_infeas = best_infeas.min(plain);

        if c > cfg.penalty_cap || stagnant_rounds >= 3 {
            let status =
                if plain > eps.max(cfg.feas_tol) { InnerStatus::Infeasible } else { InnerStatus::IterLimit };
            return AlmOutcome { z, lambda, mu, pg_residual: pg_res, iters: total_iters, status, penalty: c };
        }
    }
    let status = match last_status {
        SpgStatus::Stalled => InnerStatus::Stalled,
        _ => InnerStatus::IterLimit,
    };
    AlmOutcome { z, lambda, mu, pg_residual: pg_res, iters: total_iters, status, penalty: c }
}

/// Adapter exposing an x-block constraint to the combined `(x, y)`
/// variable vector.
struct XBlockConstraint<'a> {
    inner: &'a dyn ConstraintBlock,
    n_x: usize,
    n_total: usize,
}

impl ConstraintBlock for XBlockConstraint<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, z: &[f64], out: &mut [f64]) {
        self.inner.eval(&z[..self.n_x], out)
    }
    fn jacobian(&self, z: &[f64], out: &mut nalgebra::DMatrix<f64>) {
        let mut jx = nalgebra::DMatrix::zeros(self.inner.dim(), self.n_x);
        self.inner.jacobian(&z[..self.n_x], &mut jx);
        debug_assert_eq!(out.ncols(), self.n_total);
        out.fill(0.0);
        for r in 0..jx.nrows() {
            for cc in 0..self.n_x {
                out[(r, cc)] = jx[(r, cc)];
            }
        }
    }
}

/// Everything the six step-2 tests need at a candidate
/// `(x, y, lambda, mu)`: the SP-Lagrangian gradient with the penalty
/// coupling, extracted bound multipliers, and the assembled residuals.
pub struct Step2Eval {
    pub nu_x: Vec<f64>,
    pub nu_y: Vec<f64>,
    pub residuals: KktResiduals,
    pub free_residuals: (f64, f64),
}

pub fn step2_eval(
    sub: &PenalizedSubproblem,
    x: &[f64],
    y: &[f64],
    lambda: &[f64],
    mu: &[f64],
    tau: f64,
) -> Step2Eval {
    let base = &sub.base;
    let n = base.n;
    let ny = y.len();

    // grad_x = grad f + Jg^T lambda + Jh^T mu + alpha * y (scattered).
    let mut grad_x = vec![0.0; n];
    base.grad_f(x, &mut grad_x);
    if let Some(jg) = base.jac_g(x) {
        for i in 0..jg.nrows() {
            if lambda[i] != 0.0 {
                for col in 0..n {
                    grad_x[col] += lambda[i] * jg[(i, col)];
                }
            }
        }
    }
    if let Some(jh) = base.jac_h(x) {
        for j in 0..jh.nrows() {
            if mu[j] != 0.0 {
                for col in 0..n {
                    grad_x[col] += mu[j] * jh[(j, col)];
                }
            }
        }
    }
    let mut grad_y = vec![0.0; ny];
    sub.penalty.gradient_into(y, &mut grad_y);
    for (k, &i) in sub.masked().iter().enumerate() {
        grad_x[i] += sub.alpha * y[k];
        grad_y[k] += sub.alpha * x[i];
    }

    // Coordinates inside the projection block are certified by the
    // projected-gradient test, not by bound multipliers.
    let block = base.proj.as_ref().map(BlockProjection::coords);
    let in_block = |i: usize| block.as_ref().is_some_and(|r| r.contains(&i));

    let nu_x_full = extract_bound_multipliers(x, &grad_x, &base.lower, &base.upper, tau);
    let nu_x: Vec<f64> =
        (0..n).map(|i| if in_block(i) { 0.0 } else { nu_x_full[i] }).collect();
    let stat_x_vec = bound_stat_defect(x, &grad_x, &base.lower, &base.upper, tau);
    let stat_x = (0..n)
        .filter(|&i| !in_block(i))
        .fold(0.0f64, |mm, i| mm.max(stat_x_vec[i].abs()));
    let comp_x_vec = bound_comp_defect(x, &nu_x, &base.lower, &base.upper, tau);
    let comp_x = la::norm_inf(&comp_x_vec);

    let zeros = vec![0.0; ny];
    let infs = vec![f64::INFINITY; ny];
    let nu_y = extract_bound_multipliers(y, &grad_y, &zeros, &infs, tau);
    let stat_y = la::norm_inf(&bound_stat_defect(y, &grad_y, &zeros, &infs, tau));
    let comp_y = la::norm_inf(&bound_comp_defect(y, &nu_y, &zeros, &infs, tau));

    // Projected-gradient residual over the block coordinates.
    let stat_proj = base.proj.as_ref().map(|proj| {
        let mut moved = x.to_vec();
        for i in proj.coords() {
            moved[i] -= grad_x[i];
        }
        proj.apply(&mut moved);
        proj.coords().fold(0.0f64, |mm, i| mm.max((moved[i] - x[i]).abs()))
    });

    let gval = base.eval_g(x);
    let feas_g = gval
        .iter()
        .zip(lambda)
        .fold(0.0f64, |mm, (&gi, &li)| mm.max((-gi).min(li).abs()));
    let feas_h = la::norm_inf(&base.eval_h(x));

    // Multiplier-free projection residuals over the same gradient.
    let mut moved_x = vec![0.0; n];
    for i in 0..n {
        moved_x[i] = x[i] - grad_x[i];
    }
    base.project(&mut moved_x);
    let r_x = (0..n).fold(0.0f64, |mm, i| mm.max((moved_x[i] - x[i]).abs()));
    let r_y = (0..ny).fold(0.0f64, |mm, k| {
        let proj = (y[k] - grad_y[k]).max(0.0);
        mm.max((proj - y[k]).abs())
    });

    Step2Eval {
        nu_x,
        nu_y,
        residuals: KktResiduals { stat_x, stat_y, feas_g, feas_h, comp_x, comp_y, stat_proj },
        free_residuals: (r_x, r_y),
    }
}

/// Solves `Pen(alpha)` from `(x0, y0)` to the step-2 accuracy `eps`,
/// warm-started at the supplied multipliers. With no `g`/`h` the ALM
/// layer is bypassed. `multiplier_free` switches the acceptance test to
/// the two projection residuals.
#[allow(clippy::too_many_arguments)]
pub fn alm_solve(
    sub: &PenalizedSubproblem,
    x0: &[f64],
    y0: &[f64],
    eps: f64,
    cfg: &AlmConfig,
    lambda0: &[f64],
    mu0: &[f64],
    multiplier_free: bool,
) -> InnerResult {
    let base = &sub.base;
    let n = base.n;
    let ny = sub.masked().len();
    let n_total = n + ny;
    let spg_tol = (cfg.spg_tol_factor * eps).max(cfg.spg_tol_floor);
    let feas_tol = eps.min(cfg.feas_tol);

    let mut z0 = Vec::with_capacity(n_total);
    z0.extend_from_slice(x0);
    z0.extend_from_slice(y0);

    let project = |z: &mut [f64]| {
        let (zx, zy) = z.split_at_mut(n);
        for i in 0..n {
            zx[i] = zx[i].clamp(base.lower[i], base.upper[i]);
        }
        if let Some(proj) = &base.proj {
            proj.apply(zx);
        }
        for v in zy.iter_mut() {
            *v = v.max(0.0);
        }
    };

    let mut objective = |z: &[f64], grad: &mut [f64]| -> f64 {
        let (zx, zy) = z.split_at(n);
        let (gx, gy) = grad.split_at_mut(n);
        sub.gradient(zx, zy, gx, gy);
        sub.value(zx, zy)
    };

    let g_adapter = base
        .ineq
        .as_ref()
        .map(|g| XBlockConstraint { inner: g.as_ref(), n_x: n, n_total });
    let h_adapter = base
        .eq
        .as_ref()
        .map(|h| XBlockConstraint { inner: h.as_ref(), n_x: n, n_total });
    let nlp = AlmProblem {
        n: n_total,
        g: g_adapter.as_ref().map(|a| a as &dyn ConstraintBlock),
        h: h_adapter.as_ref().map(|a| a as &dyn ConstraintBlock),
    };

    let mut stop_check = |z: &[f64], lam: &[f64], mu: &[f64]| -> bool {
        let (zx, zy) = z.split_at(n);
        let ev = step2_eval(sub, zx, zy, lam, mu, spg_tol);
        let r = &ev.residuals;
        let feas_ok = r.feas_h <= feas_tol
            && base.eval_g(zx).iter().all(|&gi| gi <= feas_tol)
            && r.feas_g <= eps;
        let proj_ok = r.stat_proj.map_or(true, |v| v <= eps);
        if multiplier_free {
            let (rx, ry) = ev.free_residuals;
            feas_ok && proj_ok && rx <= eps && ry <= eps
        } else {
            feas_ok
                && proj_ok
                && r.stat_x <= eps
                && r.stat_y <= eps
                && r.comp_x <= eps
                && r.comp_y <= eps
        }
    };

    let out = alm_minimize(
        &nlp,
        &mut objective,
        &project,
        &z0,
        lambda0,
        mu0,
        eps,
        cfg,
        &mut stop_check,
    );

    let (zx, zy) = out.z.split_at(n);
    let ev = step2_eval(sub, zx, zy, &out.lambda, &out.mu, spg_tol);
    InnerResult {
        x: zx.to_vec(),
        y: zy.to_vec(),
        lambda: out.lambda,
        mu: out.mu,
        nu_x: ev.nu_x,
        nu_y: ev.nu_y,
        residuals: ev.residuals,
        free_residuals: ev.free_residuals,
        pg_residual: out.pg_residual,
        inner_iters: out.iters,
        status: out.status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::PenaltySpec;
    use crate::problem::{build_penalized, FnConstraint, FnObjective, SparseProblem};
    use std::sync::Arc;

    #[test]
    fn project_box_examples() {
        let v = project_box(&[-1.0, 2.0], &[0.0, 0.0], &[f64::INFINITY; 2]).unwrap();
        assert_eq!(v, vec![0.0, 2.0]);
        let v = project_box(&[0.5], &[0.0], &[0.3]).unwrap();
        assert_eq!(v, vec![0.3]);
        let v = project_box(&[0.2, 0.1], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(v, vec![0.2, 0.1]);
        assert_eq!(project_box(&[0.0], &[1.0], &[0.5]), Err(InnerError::EmptyBox(0)));
    }

    #[test]
    fn spg_projects_unconstrained_minimum() {
        // F(x) = 0.5 ||x - c||^2 over x >= 0 with c = (-1, 2).
        let c = [-1.0, 2.0];
        let mut f = |x: &[f64], g: &mut [f64]| -> f64 {
            let mut v = 0.0;
            for i in 0..2 {
                g[i] = x[i] - c[i];
                v += 0.5 * (x[i] - c[i]) * (x[i] - c[i]);
            }
            v
        };
        let proj = |x: &mut [f64]| {
            for v in x.iter_mut() {
                *v = v.max(0.0);
            }
        };
        let r = spg_solve(&mut f, &proj, &[5.0, 5.0], 1e-10, 500);
        assert_eq!(r.status, SpgStatus::Converged);
        assert!((r.x[0] - 0.0).abs() < 1e-9 && (r.x[1] - 2.0).abs() < 1e-9);
        assert!(r.pg_residual <= 1e-10);
    }

    #[test]
    fn spg_linear_objective_runs_to_vertex() {
        let mut f = |x: &[f64], g: &mut [f64]| -> f64 {
            g[0] = -1.0;
            g[1] = 1.0;
            -x[0] + x[1]
        };
        let proj = |x: &mut [f64]| {
            for v in x.iter_mut() {
                *v = v.clamp(0.0, 2.0);
            }
        };
        let r = spg_solve(&mut f, &proj, &[1.0, 1.0], 1e-12, 200);
        assert_eq!(r.status, SpgStatus::Converged);
        assert_eq!(r.x, vec![2.0, 0.0]);
    }

    #[test]
    fn spg_never_exceeds_start_value() {
        // Rosenbrock-like nonconvex bowl restricted to a box.
        let mut f = |x: &[f64], g: &mut [f64]| -> f64 {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a) * (1.0 - a) + 100.0 * (b - a * a) * (b - a * a)
        };
        let proj = |x: &mut [f64]| {
            for v in x.iter_mut() {
                *v = v.clamp(-2.0, 2.0);
            }
        };
        let start = [-1.2, 1.0];
        let mut g0 = vec![0.0; 2];
        let f0 = f(&start, &mut g0);
        let r = spg_solve(&mut f, &proj, &start, 1e-8, 5000);
        assert!(r.value <= f0);
        assert_eq!(r.status, SpgStatus::Converged);
    }

    #[test]
    fn extract_bound_multiplier_examples() {
        let nu = extract_bound_multipliers(&[0.0], &[3.0], &[0.0], &[f64::INFINITY], 1e-8);
        assert_eq!(nu, vec![3.0]);
        let nu = extract_bound_multipliers(&[0.0], &[-3.0], &[0.0], &[f64::INFINITY], 1e-8);
        assert_eq!(nu, vec![0.0]);
        let nu = extract_bound_multipliers(&[0.5], &[7.0], &[0.0], &[1.0], 1e-8);
        assert_eq!(nu, vec![0.0]);
    }

    fn example_6_4() -> PenalizedSubproblem {
        let obj = FnObjective::new(|x| -x[0], |_x, g| g[0] = -1.0);
        let base = Arc::new(SparseProblem::new("neg-x", 1, Arc::new(obj), 1.0).unwrap());
        build_penalized(base, PenaltySpec::natural(1.0, 1), 1.0).unwrap()
    }

    #[test]
    fn step2_residuals_vanish_at_closed_form_point() {
        let sub = example_6_4();
        let s2 = 2.0_f64.sqrt();
        let ev = step2_eval(&sub, &[s2 - 1.0], &[1.0], &[], &[], 1e-9);
        assert!(ev.residuals.max() <= 1e-14, "{:?}", ev.residuals);
        assert!(ev.free_residuals.0 <= 1e-14 && ev.free_residuals.1 <= 1e-14);
    }

    #[test]
    fn spg_near_the_interior_stationary_family() {
        // The family point of the linear-objective toy is a saddle of the
        // penalized objective: exact residual zero at the point itself,
        // while descent from a perturbed start ends at the sign-constrained
        // stationary corner (0, sqrt(2)) or keeps decreasing the value
        // (the objective is unbounded along x with y = 0).
        let s2 = 2.0_f64.sqrt();
        let sub = example_6_4();
        let mut f = |z: &[f64], g: &mut [f64]| -> f64 {
            let (zx, zy) = z.split_at(1);
            let (gx, gy) = g.split_at_mut(1);
            sub.gradient(zx, zy, gx, gy);
            sub.value(zx, zy)
        };
        let proj = |z: &mut [f64]| {
            for v in z.iter_mut() {
                *v = v.max(0.0);
            }
        };
        let ev = step2_eval(&sub, &[s2 - 1.0], &[1.0], &[], &[], 1e-12);
        assert_eq!(ev.residuals.max(), 0.0);

        let start_value = sub.value(&[s2 - 1.0 + 0.01], &[1.01]);
        let r = spg_solve(&mut f, &proj, &[s2 - 1.0 + 0.01, 1.01], 1e-8, 2000);
        assert!(r.value <= start_value, "descent lost: {} vs {start_value}", r.value);

        // The other side of the saddle flows into the corner point.
        let r = spg_solve(&mut f, &proj, &[s2 - 1.0 - 0.01, 0.99], 1e-8, 5000);
        assert_eq!(r.status, SpgStatus::Converged);
        assert!(r.x[0].abs() <= 1e-8 && (r.x[1] - s2).abs() <= 1e-6, "{:?}", r.x);
    }

    #[test]
    fn alm_bypass_on_bound_only_problem() {
        // Quadratic objective, no g/h: the bypass path must converge.
        let obj = FnObjective::new(
            |x| 0.5 * ((x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2)),
            |x, g| {
                g[0] = x[0] - 2.0;
                g[1] = x[1] + 1.0;
            },
        );
        let base = Arc::new(SparseProblem::new("bp-toy", 2, Arc::new(obj), 1.0).unwrap());
        let sub = build_penalized(base, PenaltySpec::natural(1.0, 2), 2.0).unwrap();
        let r = alm_solve(&sub, &[1.0, 1.0], &[1.0, 1.0], 1e-6, &AlmConfig::default(), &[], &[], false);
        assert_eq!(r.status, InnerStatus::Converged);
        assert!(r.residuals.max() <= 1e-6, "{:?}", r.residuals);
    }

    #[test]
    fn alm_handles_equality_constraint() {
        // min (x0-2)^2 + (x1-2)^2 + penalty terms s.t. x0 + x1 = 1.
        let obj = FnObjective::new(
            |x| (x[0] - 2.0).powi(2) + (x[1] - 2.0).powi(2),
            |x, g| {
                g[0] = 2.0 * (x[0] - 2.0);
                g[1] = 2.0 * (x[1] - 2.0);
            },
        );
        let h = FnConstraint::new(
            1,
            |x, out| out[0] = x[0] + x[1] - 1.0,
            |_x, j| {
                j[(0, 0)] = 1.0;
                j[(0, 1)] = 1.0;
            },
        );
        let base = Arc::new(
            SparseProblem::new("eq-toy", 2, Arc::new(obj), 1.0)
                .unwrap()
                .with_eq(Arc::new(h)),
        );
        let sub = build_penalized(base, PenaltySpec::natural(1.0, 2), 0.1).unwrap();
        let r = alm_solve(&sub, &[0.5, 0.5], &[0.0, 0.0], 1e-6, &AlmConfig::default(), &[], &[], false);
        assert_eq!(r.status, InnerStatus::Converged);
        assert!(r.residuals.feas_h <= 1e-8);
        assert!((r.x[0] + r.x[1] - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn infeasible_problem_is_detected() {
        // h(x) = x0 + 1 = 0 with x0 >= 0 has no feasible point.
        let obj = FnObjective::new(|_x| 0.0, |_x, g| g[0] = 0.0);
        let h = FnConstraint::new(
            1,
            |x, out| out[0] = x[0] + 1.0,
            |_x, j| j[(0, 0)] = 1.0,
        );
        let base = Arc::new(
            SparseProblem::new("infeas", 1, Arc::new(obj), 1.0)
                .unwrap()
                .with_eq(Arc::new(h)),
        );
        let sub = build_penalized(base, PenaltySpec::natural(1.0, 1), 1.0).unwrap();
        let mut cfg = AlmConfig::default();
        cfg.max_alm_iters = 40;
        let r = alm_solve(&sub, &[0.0], &[1.0], 1e-6, &cfg, &[], &[], false);
        assert_eq!(r.status, InnerStatus::Infeasible);
    }
}
