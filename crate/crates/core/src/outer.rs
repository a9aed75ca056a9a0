//! Exact penalty outer loop.
//!
//! Each outer iteration solves `Pen(alpha_k)` inexactly to accuracy
//! `eps_k`, checks the termination test `eps_k <= delta` and
//! `sum_i x_i y_i <= delta`, and otherwise grows the penalty weight by
//! `alpha_{k+1} = beta * alpha_k`, warm-starting the next inner solve
//! from the current iterate and multipliers.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::inner::{alm_solve, step2_eval, AlmConfig, InnerResult, InnerStatus};
use crate::penalty::PenaltySpec;
use crate::problem::{
    build_penalized, default_zero_tol, l0_count, l0_objective, PenalizedSubproblem, ProblemError,
    SparseProblem,
};

/// Inexactness sequence `eps_k` for the inner solves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EpsSchedule {
    /// `eps_k = max(eps0 * factor^k, eps_min)`. The theoretical mode has
    /// `eps_min = 0`; practice keeps a small floor.
    Geometric { eps0: f64, factor: f64, eps_min: f64 },
    /// `eps_k = c / (alpha_k * (k + 1))`, which forces
    /// `eps_k * alpha_k -> 0`.
    Coupled { c: f64 },
}

impl EpsSchedule {
    pub fn eps(&self, k: usize, alpha_k: f64) -> f64 {
        match *self {
            EpsSchedule::Geometric { eps0, factor, eps_min } => {
                (eps0 * factor.powi(k as i32)).max(eps_min)
            }
            EpsSchedule::Coupled { c } => c / (alpha_k * (k as f64 + 1.0)),
        }
    }

    fn validate(&self) -> Result<(), SolveError> {
        match *self {
            EpsSchedule::Geometric { eps0, factor, eps_min } => {
                if !(eps0 > 0.0) || !(factor > 0.0 && factor < 1.0) || !(eps_min >= 0.0) {
                    return Err(SolveError::BadConfig(
                        "geometric schedule needs eps0 > 0, 0 < factor < 1, eps_min >= 0".into(),
                    ));
                }
            }
            EpsSchedule::Coupled { c } => {
                if !(c > 0.0) {
                    return Err(SolveError::BadConfig("coupled schedule needs c > 0".into()));
                }
            }
        }
        Ok(())
    }
}

/// Outer-loop parameters. Defaults follow the portfolio-tuned setting:
/// `alpha0 = 1`, `beta = 1.1`, `delta = 1e-6`, geometric eps from 1e-2
/// halving down to 1e-8.
#[derive(Debug, Clone)]
pub struct OuterConfig {
    pub alpha0: f64,
    pub beta: f64,
    pub delta: f64,
    pub eps: EpsSchedule,
    pub max_outer: usize,
    pub multiplier_free: bool,
    pub seed: u64,
    /// Reporting zero tolerance; adaptive `1e-6 * max(1, ||x||_inf)` when
    /// unset.
    pub zero_tol: Option<f64>,
    pub alm: AlmConfig,
}

impl Default for OuterConfig {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            beta: 1.1,
            delta: 1e-6,
            eps: EpsSchedule::Geometric { eps0: 1e-2, factor: 0.5, eps_min: 1e-8 },
            max_outer: 200,
            multiplier_free: false,
            seed: 0,
            zero_tol: None,
            alm: AlmConfig::default(),
        }
    }
}

impl OuterConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.alpha0 > 0.0) {
            return Err(SolveError::BadConfig("alpha0 must be positive".into()));
        }
        if !(self.beta > 1.0) {
            return Err(SolveError::BadConfig("beta must exceed 1".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(SolveError::BadConfig("delta must be nonnegative".into()));
        }
        if self.max_outer == 0 {
            return Err(SolveError::BadConfig("max_outer must be at least 1".into()));
        }
        self.eps.validate()
    }
}

/// The six residuals of the inner acceptance test, plus the
/// projected-gradient residual of an optional projection block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktResiduals {
    pub stat_x: f64,
    pub stat_y: f64,
    pub feas_g: f64,
    pub feas_h: f64,
    pub comp_x: f64,
    pub comp_y: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stat_proj: Option<f64>,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        let base = self
            .stat_x
            .max(self.stat_y)
            .max(self.feas_g)
            .max(self.feas_h)
            .max(self.comp_x)
            .max(self.comp_y);
        match self.stat_proj {
            Some(v) => base.max(v),
            None => base,
        }
    }
}

/// One accepted outer iterate.
#[derive(Debug, Clone)]
pub struct Iterate {
    pub k: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub nu_x: Vec<f64>,
    pub nu_y: Vec<f64>,
    pub alpha: f64,
    pub eps: f64,
    pub residuals: KktResiduals,
    pub comp: f64,
}

/// Step-3 termination test: `eps_k <= delta` and `x^T y <= delta`.
pub fn step3_check(iterate: &Iterate, delta: f64) -> bool {
    iterate.eps <= delta && iterate.comp <= delta
}

/// Multiplier-free stationarity tests: infinity norms of
/// `P(x - (grad_x L_sp + alpha y)) - x` and the `y` analog, with the
/// multipliers supplied by the ALM layer.
pub fn multiplier_free_residuals(
    sub: &PenalizedSubproblem,
    x: &[f64],
    y: &[f64],
    lambda: &[f64],
    mu: &[f64],
) -> (f64, f64) {
    step2_eval(sub, x, y, lambda, mu, 0.0).free_residuals
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Step3,
    MaxOuter,
    InnerFailure,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub k: usize,
    pub alpha: f64,
    pub eps: f64,
    pub residuals: KktResiduals,
    pub comp: f64,
    pub f: f64,
    pub l0: usize,
    pub inner_iters: usize,
    pub inner_status: InnerStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(rename = "status")]
    pub termination: Termination,
    pub objective: f64,
    pub l0_objective: f64,
    pub support: Vec<usize>,
    pub comp: f64,
    pub residuals: KktResiduals,
    pub s_residual: f64,
    pub biactive: Vec<usize>,
    pub zero_tol: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub trace: Vec<TraceEntry>,
    pub wall_time_ms: f64,
    /// Per-iterate points, kept for diagnostics; not serialized.
    #[serde(skip)]
    pub iterates: Vec<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("problem has free coordinates; split them before solving")]
    FreeVariables,
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("start point has wrong dimension")]
    BadStart,
}

/// Runs the exact penalty method on a problem in canonical nonnegative
/// form. `start`, when given, is `(x0, y0)` with `y0` on the masked
/// coordinates; both are projected onto their feasible boxes first.
pub fn solve(
    problem: Arc<SparseProblem>,
    penalty: &PenaltySpec,
    cfg: &OuterConfig,
    start: Option<(&[f64], &[f64])>,
) -> Result<SolveReport, SolveError> {
    cfg.validate()?;
    if problem.lower.iter().any(|&l| l < 0.0 && l.is_finite()) && problem.proj.is_none() {
        return Err(SolveError::FreeVariables);
    }
    let clock = Instant::now();
    let masked = problem.masked_indices();
    let pen = penalty.with_dim(masked.len());
    let s = pen.minimizer_point();

    let (mut x, mut y) = match start {
        Some((x0, y0)) => {
            if x0.len() != problem.n || y0.len() != masked.len() {
                return Err(SolveError::BadStart);
            }
            (x0.to_vec(), y0.to_vec())
        }
        None => (vec![0.0; problem.n], vec![s; masked.len()]),
    };
    problem.project(&mut x);
    for v in y.iter_mut() {
        *v = v.max(0.0);
    }

    let mut lambda = vec![0.0; problem.m()];
    let mut mu = vec![0.0; problem.p()];
    let mut trace = Vec::new();
    let mut iterates = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut consecutive_failures = 0usize;
    let mut termination = Termination::MaxOuter;
    let mut final_residuals: Option<KktResiduals> = None;

    for k in 0..cfg.max_outer {
        let alpha_k = cfg.alpha0 * cfg.beta.powi(k as i32);
        let eps_k = cfg.eps.eps(k, alpha_k);
        let sub = build_penalized(Arc::clone(&problem), pen.clone(), alpha_k)?;

        let mut inner = alm_solve(
            &sub,
            &x,
            &y,
            eps_k,
            &cfg.alm,
            &lambda,
            &mu,
            cfg.multiplier_free,
        );
        if inner.status != InnerStatus::Converged {
            // One retry from a jittered start before counting a failure.
            let mut xr = x.clone();
            let mut yr = y.clone();
            for v in xr.iter_mut() {
                *v += 0.01 * (1.0 + v.abs()) * (rng.gen::<f64>() * 2.0 - 1.0);
            }
            for v in yr.iter_mut() {
                *v = (*v + 0.01 * (1.0 + v.abs()) * (rng.gen::<f64>() * 2.0 - 1.0)).max(0.0);
            }
            problem.project(&mut xr);
            let retry = alm_solve(
                &sub,
                &xr,
                &yr,
                eps_k,
                &cfg.alm,
                &lambda,
                &mu,
                cfg.multiplier_free,
            );
            if retry.status == InnerStatus::Converged || better(&retry, &inner) {
                inner = retry;
            }
        }

        let comp = sub.comp(&inner.x, &inner.y);
        trace.push(TraceEntry {
            k,
            alpha: alpha_k,
            eps: eps_k,
            residuals: inner.residuals.clone(),
            comp,
            f: problem.f(&inner.x),
            l0: l0_count(&problem, &inner.x, default_zero_tol(&inner.x)),
            inner_iters: inner.inner_iters,
            inner_status: inner.status,
        });
        iterates.push((inner.x.clone(), inner.y.clone()));

        // Warm start the next round from wherever the inner solver ended.
        x = inner.x.clone();
        y = inner.y.clone();
        lambda = inner.lambda.clone();
        mu = inner.mu.clone();
        final_residuals = Some(inner.residuals.clone());

        if inner.status == InnerStatus::Converged {
            consecutive_failures = 0;
            let iterate = Iterate {
                k,
                x: x.clone(),
                y: y.clone(),
                lambda: lambda.clone(),
                mu: mu.clone(),
                nu_x: inner.nu_x.clone(),
                nu_y: inner.nu_y.clone(),
                alpha: alpha_k,
                eps: eps_k,
                residuals: inner.residuals.clone(),
                comp,
            };
            if step3_check(&iterate, cfg.delta) {
                termination = Termination::Step3;
                break;
            }
        } else {
            consecutive_failures += 1;
            if consecutive_failures >= 2 {
                termination = Termination::InnerFailure;
                break;
            }
        }
    }

    let zero_tol = cfg.zero_tol.unwrap_or_else(|| default_zero_tol(&x));
    let support: Vec<usize> =
        masked.iter().copied().filter(|&i| x[i].abs() > zero_tol).collect();
    let biactive = crate::stationarity::biactive_masked(&problem, &x, &y, zero_tol);
    let s_res = crate::stationarity::best_multiplier_residual(&problem, &x, zero_tol).residual;
    let comp = masked.iter().zip(&y).map(|(&i, &yi)| x[i] * yi).sum();

    Ok(SolveReport {
        termination,
        objective: problem.f(&x),
        l0_objective: l0_objective(&problem, &x, zero_tol),
        support,
        comp,
        residuals: final_residuals.unwrap_or(KktResiduals {
            stat_x: f64::INFINITY,
            stat_y: f64::INFINITY,
            feas_g: f64::INFINITY,
            feas_h: f64::INFINITY,
            comp_x: f64::INFINITY,
            comp_y: f64::INFINITY,
            stat_proj: None,
        }),
        s_residual: s_res,
        biactive,
        zero_tol,
        x,
        y,
        lambda,
        mu,
        trace,
        wall_time_ms: clock.elapsed().as_secs_f64() * 1e3,
        iterates,
    })
}

fn better(a: &InnerResult, b: &InnerResult) -> bool {
    a.residuals.max() < b.residuals.max()
}
