//! Problem containers and the complementarity reformulation algebra.
//!
//! A [`SparseProblem`] holds the smooth data `f`, `g`, `h`, the box
//! `[lower, upper]`, and the sparsity weight `rho`. The canonical solver
//! form has `lower = 0`; negative lower bounds mark declared-free
//! coordinates that must go through [`crate::split`] before the penalty
//! method runs (the oracle handles them directly). An optional l0 mask
//! restricts the sparsity term to a sub-block, and an optional block
//! projection handles variables constrained to a convex set other than
//! the box (dictionary rows in the unit ball).

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::la;
use crate::penalty::PenaltySpec;

/// Smooth scalar objective with analytic gradient. Implementations must
/// be deterministic and re-entrant; the bench harness evaluates problem
/// instances from several threads.
pub trait Objective: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], grad: &mut [f64]);
}

/// Smooth vector-valued constraint block with dense Jacobian.
pub trait ConstraintBlock: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], out: &mut [f64]);
    /// Fills `out` (`dim x n`) with the Jacobian at `x`.
    fn jacobian(&self, x: &[f64], out: &mut DMatrix<f64>);
}

/// Closure-backed [`Objective`], convenient for toy problems and tests.
pub struct FnObjective {
    value: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    grad: Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
}

impl FnObjective {
    pub fn new(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self { value: Box::new(value), grad: Box::new(grad) }
    }
}

impl Objective for FnObjective {
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        (self.grad)(x, grad)
    }
}

/// Closure-backed [`ConstraintBlock`].
pub struct FnConstraint {
    dim: usize,
    eval: Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
    jac: Box<dyn Fn(&[f64], &mut DMatrix<f64>) + Send + Sync>,
}

impl FnConstraint {
    pub fn new(
        dim: usize,
        eval: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        jac: impl Fn(&[f64], &mut DMatrix<f64>) + Send + Sync + 'static,
    ) -> Self {
        Self { dim, eval: Box::new(eval), jac: Box::new(jac) }
    }
}

impl ConstraintBlock for FnConstraint {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        (self.eval)(x, out)
    }
    fn jacobian(&self, x: &[f64], out: &mut DMatrix<f64>) {
        (self.jac)(x, out)
    }
}

/// Extra convex-set constraint on a coordinate block, handled by
/// projection instead of multipliers.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockProjection {
    /// A `rows x cols` matrix stored row-major from `offset`; every row
    /// with Euclidean norm above 1 is scaled back onto the unit sphere.
    UnitBallRows { offset: usize, rows: usize, cols: usize },
}

impl BlockProjection {
    pub fn coords(&self) -> Range<usize> {
        match *self {
            BlockProjection::UnitBallRows { offset, rows, cols } => offset..offset + rows * cols,
        }
    }

    pub fn apply(&self, x: &mut [f64]) {
        match *self {
            BlockProjection::UnitBallRows { offset, rows, cols } => {
                for r in 0..rows {
                    let row = &mut x[offset + r * cols..offset + (r + 1) * cols];
                    let nrm = la::norm2(row);
                    if nrm > 1.0 {
                        for v in row.iter_mut() {
                            *v /= nrm;
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("sparsity weight rho must be positive, got {0}")]
    BadRho(f64),
    #[error("upper bound {value} at coordinate {index} must be positive")]
    BadUpper { index: usize, value: f64 },
    #[error("vector length {got} does not match problem dimension {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("penalty dimension {penalty_n} does not match the {masked} masked coordinates")]
    PenaltyDim { penalty_n: usize, masked: usize },
    #[error("penalty weight alpha must be positive, got {0}")]
    BadAlpha(f64),
    #[error("projection block overlaps l0-masked coordinates")]
    ProjectionOverlapsMask,
    #[error("complementarity violated: |x_{index} * y_{index}| = {value} exceeds 1e-8")]
    ComplementarityViolated { index: usize, value: f64 },
    #[error("reformulation gap inverted: rho*||x||_0 = {lhs} > {rhs} = p(y) - M + 1e-10")]
    GapInverted { lhs: f64, rhs: f64 },
    #[error("non-finite input")]
    NonFinite,
    #[error("{0}")]
    Invalid(String),
}

/// The sparse problem `min f(x) + rho ||x_mask||_0` over
/// `g(x) <= 0, h(x) = 0, lower <= x <= upper`.
#[derive(Clone)]
pub struct SparseProblem {
    pub name: String,
    pub n: usize,
    pub objective: Arc<dyn Objective>,
    pub ineq: Option<Arc<dyn ConstraintBlock>>,
    pub eq: Option<Arc<dyn ConstraintBlock>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rho: f64,
    pub l0_mask: Vec<bool>,
    pub proj: Option<BlockProjection>,
}

impl fmt::Debug for SparseProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SparseProblem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m())
            .field("p", &self.p())
            .field("rho", &self.rho)
            .finish()
    }
}

impl SparseProblem {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        objective: Arc<dyn Objective>,
        rho: f64,
    ) -> Result<Self, ProblemError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(ProblemError::BadRho(rho));
        }
        Ok(Self {
            name: name.into(),
            n,
            objective,
            ineq: None,
            eq: None,
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            rho,
            l0_mask: vec![true; n],
            proj: None,
        })
    }

    pub fn with_ineq(mut self, g: Arc<dyn ConstraintBlock>) -> Self {
        self.ineq = Some(g);
        self
    }

    pub fn with_eq(mut self, h: Arc<dyn ConstraintBlock>) -> Self {
        self.eq = Some(h);
        self
    }

    pub fn with_upper(mut self, upper: Vec<f64>) -> Result<Self, ProblemError> {
        if upper.len() != self.n {
            return Err(ProblemError::DimMismatch { expected: self.n, got: upper.len() });
        }
        if let Some(i) = upper.iter().position(|&u| !(u > 0.0)) {
            return Err(ProblemError::BadUpper { index: i, value: upper[i] });
        }
        self.upper = upper;
        Ok(self)
    }

    /// Declares coordinates free inside `[-r, r]`; these must be split
    /// before the penalty method runs.
    pub fn with_free(mut self, free: &[bool], r: f64) -> Result<Self, ProblemError> {
        if free.len() != self.n {
            return Err(ProblemError::DimMismatch { expected: self.n, got: free.len() });
        }
        for (i, &is_free) in free.iter().enumerate() {
            if is_free {
                self.lower[i] = -r;
                self.upper[i] = r;
            }
        }
        Ok(self)
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self, ProblemError> {
        if mask.len() != self.n {
            return Err(ProblemError::DimMismatch { expected: self.n, got: mask.len() });
        }
        self.l0_mask = mask;
        Ok(self)
    }

    pub fn with_projection(mut self, proj: BlockProjection) -> Result<Self, ProblemError> {
        if proj.coords().end > self.n {
            return Err(ProblemError::DimMismatch { expected: self.n, got: proj.coords().end });
        }
        for i in proj.coords() {
            if self.l0_mask[i] {
                return Err(ProblemError::ProjectionOverlapsMask);
            }
            self.lower[i] = f64::NEG_INFINITY;
            self.upper[i] = f64::INFINITY;
        }
        self.proj = Some(proj);
        Ok(self)
    }

    /// Number of inequality constraints.
    pub fn m(&self) -> usize {
        self.ineq.as_ref().map_or(0, |g| g.dim())
    }

    /// Number of equality constraints.
    pub fn p(&self) -> usize {
        self.eq.as_ref().map_or(0, |h| h.dim())
    }

    pub fn masked_indices(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.l0_mask[i]).collect()
    }

    pub fn num_masked(&self) -> usize {
        self.l0_mask.iter().filter(|&&b| b).count()
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    pub fn grad_f(&self, x: &[f64], out: &mut [f64]) {
        self.objective.gradient(x, out)
    }

    pub fn eval_g(&self, x: &[f64]) -> Vec<f64> {
        match &self.ineq {
            Some(g) => {
                let mut out = vec![0.0; g.dim()];
                g.eval(x, &mut out);
                out
            }
            None => Vec::new(),
        }
    }

    pub fn eval_h(&self, x: &[f64]) -> Vec<f64> {
        match &self.eq {
            Some(h) => {
                let mut out = vec![0.0; h.dim()];
                h.eval(x, &mut out);
                out
            }
            None => Vec::new(),
        }
    }

    pub fn jac_g(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        self.ineq.as_ref().map(|g| {
            let mut j = DMatrix::zeros(g.dim(), self.n);
            g.jacobian(x, &mut j);
            j
        })
    }

    pub fn jac_h(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        self.eq.as_ref().map(|h| {
            let mut j = DMatrix::zeros(h.dim(), self.n);
            h.jacobian(x, &mut j);
            j
        })
    }

    /// Projects `x` onto the box and the optional extra block set.
    pub fn project(&self, x: &mut [f64]) {
        for i in 0..self.n {
            x[i] = x[i].clamp(self.lower[i], self.upper[i]);
        }
        if let Some(proj) = &self.proj {
            proj.apply(x);
        }
    }

    /// `max(||h(x)||_inf, ||max(0, g(x))||_inf)`.
    pub fn infeasibility(&self, x: &[f64]) -> f64 {
        let gv = self.eval_g(x);
        let hv = self.eval_h(x);
        let gi = gv.iter().fold(0.0f64, |m, &v| m.max(v.max(0.0)));
        gi.max(la::norm_inf(&hv))
    }

    /// True when some coordinate has a negative lower bound; the penalty
    /// method refuses such problems until they are split.
    pub fn has_free_coords(&self) -> bool {
        self.lower.iter().any(|&l| l < 0.0)
    }
}

/// Default zero tolerance for support identification:
/// `1e-6 * max(1, ||x||_inf)`.
pub fn default_zero_tol(x: &[f64]) -> f64 {
    1e-6 * la::norm_inf(x).max(1.0)
}

/// Absolute activity tolerance for inequality constraints.
pub const ACTIVE_TOL: f64 = 1e-6;

/// Zero set and active inequality set at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    pub zero_set: Vec<usize>,
    pub active_ineq: Vec<usize>,
    pub zero_tol: f64,
}

impl SupportSet {
    pub fn compute(problem: &SparseProblem, x: &[f64], zero_tol: f64) -> Self {
        let zero_set = (0..x.len()).filter(|&i| x[i].abs() <= zero_tol).collect();
        let g = problem.eval_g(x);
        let active_ineq = (0..g.len()).filter(|&i| g[i] >= -ACTIVE_TOL).collect();
        Self { zero_set, active_ineq, zero_tol }
    }
}

/// `f(x) + rho * #{masked i : |x_i| > tau0}`.
pub fn l0_objective(problem: &SparseProblem, x: &[f64], zero_tol: f64) -> f64 {
    problem.f(x) + problem.rho * l0_count(problem, x, zero_tol) as f64
}

/// Number of masked coordinates with `|x_i| > tau0`.
pub fn l0_count(problem: &SparseProblem, x: &[f64], zero_tol: f64) -> usize {
    (0..x.len())
        .filter(|&i| problem.l0_mask[i] && x[i].abs() > zero_tol)
        .count()
}

/// The canonical auxiliary vector: `s` on the zero set of `x`, 0 on the
/// support. `x` and the penalty must have the same dimension, so masked
/// problems pass the masked subvector.
pub fn y_star(x: &[f64], penalty: &PenaltySpec, zero_tol: f64) -> Vec<f64> {
    assert_eq!(x.len(), penalty.n, "y_star dimension mismatch");
    let s = penalty.minimizer_point();
    x.iter().map(|&v| if v.abs() <= zero_tol { s } else { 0.0 }).collect()
}

/// Both sides of the reformulation inequality
/// `rho ||x||_0 <= p(y) - M` for a complementary pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// `rho * ||x_mask||_0` at tolerance `tau0`.
    pub lhs: f64,
    /// `p(y) - M`.
    pub rhs: f64,
    /// Equality within 1e-10.
    pub tight: bool,
}

/// Evaluates the reformulation gap at a complementary pair. `y` lives on
/// the masked coordinates. Errs when `x o y` is not zero within 1e-8 or
/// when the inequality itself fails (which would indicate a penalty
/// implementation bug).
pub fn reformulation_gap(
    problem: &SparseProblem,
    penalty: &PenaltySpec,
    x: &[f64],
    y: &[f64],
    zero_tol: f64,
) -> Result<GapReport, ProblemError> {
    let masked = problem.masked_indices();
    if y.len() != masked.len() || penalty.n != masked.len() {
        return Err(ProblemError::PenaltyDim { penalty_n: penalty.n, masked: masked.len() });
    }
    if !la::all_finite(x) || !la::all_finite(y) {
        return Err(ProblemError::NonFinite);
    }
    for (k, &i) in masked.iter().enumerate() {
        let prod = (x[i] * y[k]).abs();
        if prod > 1e-8 {
            return Err(ProblemError::ComplementarityViolated { index: i, value: prod });
        }
    }
    let nnz = masked.iter().filter(|&&i| x[i].abs() > zero_tol).count();
    let lhs = problem.rho * nnz as f64;
    let (_, _, big_m) = penalty.minimizer();
    let rhs = penalty.value(y).expect("finite y") - big_m;
    if lhs > rhs + 1e-10 {
        return Err(ProblemError::GapInverted { lhs, rhs });
    }
    Ok(GapReport { lhs, rhs, tight: (lhs - rhs).abs() <= 1e-10 })
}

/// The penalized subproblem `Pen(alpha)`:
/// `min f(x) + p(y) + alpha * <x_mask, y>` over the smooth constraints
/// plus `y >= 0`.
#[derive(Clone)]
pub struct PenalizedSubproblem {
    pub base: Arc<SparseProblem>,
    pub penalty: PenaltySpec,
    pub alpha: f64,
    masked: Vec<usize>,
}

impl PenalizedSubproblem {
    pub fn new(
        base: Arc<SparseProblem>,
        penalty: PenaltySpec,
        alpha: f64,
    ) -> Result<Self, ProblemError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ProblemError::BadAlpha(alpha));
        }
        let masked = base.masked_indices();
        if penalty.n != masked.len() {
            return Err(ProblemError::PenaltyDim { penalty_n: penalty.n, masked: masked.len() });
        }
        Ok(Self { base, penalty, alpha, masked })
    }

    pub fn masked(&self) -> &[usize] {
        &self.masked
    }

    /// `sum_i x_i y_i` over the masked coordinates.
    pub fn comp(&self, x: &[f64], y: &[f64]) -> f64 {
        self.masked.iter().zip(y).map(|(&i, &yi)| x[i] * yi).sum()
    }

    /// `F(x, y) = f(x) + p(y) + alpha * <x_mask, y>`.
    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let p: f64 = y.iter().map(|&t| self.penalty.value_at(t)).sum();
        self.base.f(x) + p + self.alpha * self.comp(x, y)
    }

    /// Gradient blocks `(grad f + alpha * y_hat, grad p + alpha * x_mask)`
    /// where `y_hat` scatters `y` back to full coordinates.
    pub fn gradient(&self, x: &[f64], y: &[f64], gx: &mut [f64], gy: &mut [f64]) {
        self.base.grad_f(x, gx);
        self.penalty.gradient_into(y, gy);
        for (k, &i) in self.masked.iter().enumerate() {
            gx[i] += self.alpha * y[k];
            gy[k] += self.alpha * x[i];
        }
    }

    /// Extracts the masked subvector of `x`.
    pub fn masked_part(&self, x: &[f64]) -> Vec<f64> {
        self.masked.iter().map(|&i| x[i]).collect()
    }
}

/// Builds `Pen(alpha)` from a problem and a penalty member.
pub fn build_penalized(
    problem: Arc<SparseProblem>,
    penalty: PenaltySpec,
    alpha: f64,
) -> Result<PenalizedSubproblem, ProblemError> {
    PenalizedSubproblem::new(problem, penalty, alpha)
}
