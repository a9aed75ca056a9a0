//! Brute-force global certification by support enumeration.
//!
//! For every subset `S` of the masked coordinates, the complement is
//! pinned to zero and the smooth restriction is minimized with the
//! augmented Lagrangian inner solver from three starts. The certified
//! value is `min_S (restricted min of f) + rho * |S|`. Exact for
//! problems whose restrictions are convex (portfolio, basis pursuit,
//! logistic); for nonconvex restrictions the table entries are only
//! locally optimal and the certificate is a bound, not a proof.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::inner::{alm_minimize, bound_stat_defect, AlmConfig, AlmProblem, InnerStatus};
use crate::la;
use crate::problem::{ConstraintBlock, Objective, SparseProblem};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("support enumeration refused: {masked} masked coordinates exceed the cap {max}")]
    TooLarge { masked: usize, max: usize },
    #[error("support contains an index that is not a masked coordinate: {0}")]
    BadSupport(usize),
    #[error("every support was infeasible")]
    AllInfeasible,
}

/// Outcome of one restricted minimization.
#[derive(Debug, Clone, Serialize)]
pub struct SupportEntry {
    pub support: Vec<usize>,
    /// `f + rho |S|` when feasible.
    pub value: Option<f64>,
    pub x: Option<Vec<f64>>,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub best_support: Vec<usize>,
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub table: Vec<SupportEntry>,
    pub enumerated_count: usize,
}

const FEAS_DECLARE: f64 = 1e-6;
// Stationarity target of the restricted solves. Feasibility is held at
// 1e-8 separately; the value error of a restriction scales with the
// square of this, so certified values stay well inside 1e-8.
const RESTRICTED_TOL: f64 = 1e-6;

/// Minimizes `f` over the feasible set with every masked coordinate
/// outside `support` pinned to zero. Three starts: the projected origin,
/// a seeded random point, and the box center. Returns the best feasible
/// result, or `None` when every start ends infeasible.
pub fn restricted_solve(
    problem: &SparseProblem,
    support: &[usize],
) -> Result<Option<(f64, Vec<f64>)>, OracleError> {
    restricted_solve_seeded(problem, support, 0)
}

pub fn restricted_solve_seeded(
    problem: &SparseProblem,
    support: &[usize],
    seed: u64,
) -> Result<Option<(f64, Vec<f64>)>, OracleError> {
    let n = problem.n;
    for &i in support {
        if i >= n || !problem.l0_mask[i] {
            return Err(OracleError::BadSupport(i));
        }
    }
    let mut lo = problem.lower.clone();
    let mut hi = problem.upper.clone();
    for i in 0..n {
        if problem.l0_mask[i] && !support.contains(&i) {
            lo[i] = 0.0;
            hi[i] = 0.0;
        }
    }

    let project = |z: &mut [f64]| {
        for i in 0..n {
            z[i] = z[i].clamp(lo[i], hi[i]);
        }
        if let Some(proj) = &problem.proj {
            proj.apply(z);
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(1));
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(3);
    starts.push(vec![0.0; n]);
    starts.push(
        (0..n)
            .map(|i| {
                let span = if hi[i].is_finite() { hi[i] - lo[i].max(-1e3) } else { 1.0 };
                lo[i].max(-1e3) + rng.gen::<f64>() * span.max(0.0)
            })
            .collect(),
    );
    starts.push(
        (0..n)
            .map(|i| {
                if hi[i].is_finite() {
                    0.5 * (lo[i].max(-1e3) + hi[i])
                } else {
                    lo[i].max(-1e3) + 1.0
                }
            })
            .collect(),
    );

    let mut cfg = AlmConfig::default();
    let nlp = AlmProblem {
        n,
        g: problem.ineq.as_deref().map(|g| g as &dyn ConstraintBlock),
        h: problem.eq.as_deref().map(|h| h as &dyn ConstraintBlock),
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    // Multiplier estimates carry over between starts; the x starts stay
    // independent.
    let mut warm_lambda: Vec<f64> = Vec::new();
    let mut warm_mu: Vec<f64> = Vec::new();
    for start in &starts {
        let mut objective = |z: &[f64], grad: &mut [f64]| -> f64 {
            problem.grad_f(z, grad);
            problem.f(z)
        };
        let mut stop = |z: &[f64], lam: &[f64], mu: &[f64]| -> bool {
            let lag = crate::stationarity::sp_lagrangian(problem, z, lam, mu);
            let stat =
                la::norm_inf(&bound_stat_defect(z, &lag.gradient, &lo, &hi, RESTRICTED_TOL));
            let g = problem.eval_g(z);
            let comp = g
                .iter()
                .zip(lam)
                .fold(0.0f64, |m, (&gi, &li)| m.max((-gi).min(li).abs()));
            problem.infeasibility(z) <= cfg.feas_tol && stat <= RESTRICTED_TOL && comp <= RESTRICTED_TOL
        };
        let out = alm_minimize(
            &nlp,
            &mut objective,
            &project,
            start,
            &warm_lambda,
            &warm_mu,
            RESTRICTED_TOL,
            &cfg,
            &mut stop,
        );
        // Later starts inherit both the multipliers and the penalty
        // level the previous start ended with.
        cfg.initial_penalty = out.penalty.min(cfg.penalty_cap);
        if out.status == InnerStatus::Infeasible {
            warm_lambda = out.lambda.clone();
            warm_mu = out.mu.clone();
            continue;
        }
        warm_lambda = out.lambda.clone();
        warm_mu = out.mu.clone();
        if problem.infeasibility(&out.z) <= FEAS_DECLARE {
            let v = problem.f(&out.z);
            if best.as_ref().map_or(true, |(bv, _)| v < *bv) {
                best = Some((v, out.z));
            }
        }
    }
    Ok(best)
}

/// Enumerates all `2^k` supports of the masked coordinates (refusing
/// `k > max_n`) and certifies the global value of `f + rho ||x||_0`.
/// Ties within 1e-9 resolve toward the sparser support, then
/// lexicographically.
pub fn enumerate_supports(
    problem: &SparseProblem,
    max_n: usize,
) -> Result<OracleResult, OracleError> {
    let masked = problem.masked_indices();
    let k = masked.len();
    if k > max_n {
        return Err(OracleError::TooLarge { masked: k, max: max_n });
    }

    let mut subsets: Vec<Vec<usize>> = (0..(1usize << k))
        .map(|bits| {
            (0..k)
                .filter(|j| bits & (1 << j) != 0)
                .map(|j| masked[j])
                .collect()
        })
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    // The restricted solves are independent; fan them out over the
    // available cores. Aggregation below runs in subset order, so the
    // result does not depend on scheduling.
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(subsets.len().max(1));
    let slots: Vec<std::sync::Mutex<Option<Option<(f64, Vec<f64>)>>>> =
        (0..subsets.len()).map(|_| std::sync::Mutex::new(None)).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= subsets.len() {
                    break;
                }
                let solved = restricted_solve(problem, &subsets[i]).expect("valid support");
                *slots[i].lock().unwrap() = Some(solved);
            });
        }
    });

    let mut table = Vec::with_capacity(subsets.len());
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for (support, slot) in subsets.into_iter().zip(slots) {
        let solved = slot.into_inner().unwrap().expect("worker filled slot");
        let entry = match solved {
            Some((fval, x)) => {
                let total = fval + problem.rho * support.len() as f64;
                let improves = match &best {
                    None => true,
                    Some((bv, _, _)) => total < *bv - 1e-9,
                };
                if improves {
                    best = Some((total, support.clone(), x.clone()));
                }
                SupportEntry { support, value: Some(total), x: Some(x), feasible: true }
            }
            None => SupportEntry { support, value: None, x: None, feasible: false },
        };
        table.push(entry);
    }

    let (best_value, best_support, best_x) = best.ok_or(OracleError::AllInfeasible)?;
    let count = table.len();
    Ok(OracleResult {
        best_support,
        best_x,
        best_value,
        table,
        enumerated_count: count,
    })
}

/// Max relative error between the analytic gradient and central finite
/// differences: `max_i |g_i - fd_i| / (1 + |fd_i|)`.
pub fn gradient_check(objective: &dyn Objective, x: &[f64], h: f64) -> f64 {
    assert!(h > 0.0, "finite-difference step must be positive");
    let n = x.len();
    let mut grad = vec![0.0; n];
    objective.gradient(x, &mut grad);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..n {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        let fd = (objective.value(&xp) - objective.value(&xm)) / (2.0 * h);
        worst = worst.max(la::rel_err(grad[i], fd));
        xp[i] = x[i];
        xm[i] = x[i];
    }
    worst
}

/// Adapter viewing one row of a constraint block as a scalar objective,
/// so [`gradient_check`] covers constraint Jacobians too.
pub struct ConstraintRow<'a> {
    pub block: &'a dyn ConstraintBlock,
    pub row: usize,
}

impl Objective for ConstraintRow<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let mut out = vec![0.0; self.block.dim()];
        self.block.eval(x, &mut out);
        out[self.row]
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let mut j = nalgebra::DMatrix::zeros(self.block.dim(), x.len());
        self.block.jacobian(x, &mut j);
        for c in 0..x.len() {
            grad[c] = j[(self.row, c)];
        }
    }
}
