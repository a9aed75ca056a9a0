//! Separable penalty family on the auxiliary variable.
//!
//! Each member is a sum `p(y) = sum_i p_i(y_i)` of identical scalar terms
//! satisfying three axioms: `p_i` is convex with a unique minimizer
//! `s > 0`, the scaling `p_i(0) - p_i(s) = rho` holds exactly, and `p_i`
//! is smooth enough for gradient-based inner solvers. Three members are
//! provided:
//!
//! * `QuadraticShifted`: `rho * t * (t - 2)`, minimizer `s = 1`;
//! * `NaturalQuadratic`: `0.5 * (t - sqrt(2 rho))^2`, minimizer
//!   `s = sqrt(2 rho)`;
//! * `HuberShifted`: a Huber smoothing of the shifted absolute value,
//!   quadratic on `[s - eps, s + eps]` and linear outside, scaled by
//!   `xi = rho / (eps * sqrt(2 rho) - eps^2 / 2)` so the scaling axiom
//!   holds.
//!
//! The Huber branch thresholds are centered at the minimizer
//! `s = sqrt(2 rho)`, with the closed interval assigned to the central
//! quadratic branch; the one-sided derivatives agree there, so the
//! gradient is continuous.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    #[serde(rename = "quadratic")]
    QuadraticShifted,
    #[serde(rename = "natural")]
    NaturalQuadratic,
    #[serde(rename = "huber")]
    HuberShifted,
}

/// A concrete member of the penalty family, fixed dimension included.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub rho: f64,
    /// Half-width of the Huber quadratic branch; ignored by the other kinds.
    pub huber_eps: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum PenaltyError {
    #[error("penalty parameter rho must be positive and finite, got {0}")]
    BadRho(f64),
    #[error("huber penalty requires a positive finite epsilon, got {0:?}")]
    BadEps(Option<f64>),
    #[error("dimension must be at least 1")]
    BadDim,
    #[error("dimension mismatch: spec has n = {expected}, input has length {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("non-finite input at component {0}")]
    NonFinite(usize),
}

/// One axiom violation found by [`PenaltySpec::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum AxiomViolation {
    /// Finite-difference slopes decreased somewhere: not convex.
    Convexity { at: f64 },
    /// The function fails to strictly decrease left of `s` or strictly
    /// increase right of it, so the minimizer is not unique.
    MinimizerNotUnique { at: f64 },
    /// `|p(0) - p(s) - rho|` exceeds 1e-12.
    Scaling { error: f64 },
    /// The Huber scaling factor is not positive (`eps >= sqrt(2 rho)`).
    NonpositiveScale { xi: f64 },
}

impl PenaltySpec {
    pub fn new(
        kind: PenaltyKind,
        rho: f64,
        huber_eps: Option<f64>,
        n: usize,
    ) -> Result<Self, PenaltyError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(PenaltyError::BadRho(rho));
        }
        if n == 0 {
            return Err(PenaltyError::BadDim);
        }
        if kind == PenaltyKind::HuberShifted {
            match huber_eps {
                Some(e) if e > 0.0 && e.is_finite() => {}
                other => return Err(PenaltyError::BadEps(other)),
            }
        }
        Ok(Self { kind, rho, huber_eps, n })
    }

    pub fn quadratic(rho: f64, n: usize) -> Self {
        Self::new(PenaltyKind::QuadraticShifted, rho, None, n).expect("valid quadratic spec")
    }

    pub fn natural(rho: f64, n: usize) -> Self {
        Self::new(PenaltyKind::NaturalQuadratic, rho, None, n).expect("valid natural spec")
    }

    pub fn huber(rho: f64, eps: f64, n: usize) -> Result<Self, PenaltyError> {
        Self::new(PenaltyKind::HuberShifted, rho, Some(eps), n)
    }

    /// Same member in a different dimension.
    pub fn with_dim(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    /// Per-component minimizer `s`.
    pub fn minimizer_point(&self) -> f64 {
        match self.kind {
            PenaltyKind::QuadraticShifted => 1.0,
            PenaltyKind::NaturalQuadratic | PenaltyKind::HuberShifted => (2.0 * self.rho).sqrt(),
        }
    }

    /// Per-component minimal value `m = p_i(s)`.
    pub fn minimizer_value(&self) -> f64 {
        match self.kind {
            PenaltyKind::QuadraticShifted => -self.rho,
            PenaltyKind::NaturalQuadratic | PenaltyKind::HuberShifted => 0.0,
        }
    }

    /// Huber scale `xi`; 1 for the other kinds.
    fn scale(&self) -> f64 {
        match self.kind {
            PenaltyKind::HuberShifted => {
                let e = self.huber_eps.unwrap_or(f64::NAN);
                self.rho / (e * (2.0 * self.rho).sqrt() - 0.5 * e * e)
            }
            _ => 1.0,
        }
    }

    /// Scalar term `p_i(t)`.
    pub fn value_at(&self, t: f64) -> f64 {
        match self.kind {
            PenaltyKind::QuadraticShifted => self.rho * t * (t - 2.0),
            PenaltyKind::NaturalQuadratic => {
                let d = t - (2.0 * self.rho).sqrt();
                0.5 * d * d
            }
            PenaltyKind::HuberShifted => {
                let s = (2.0 * self.rho).sqrt();
                let e = self.huber_eps.unwrap_or(f64::NAN);
                let xi = self.scale();
                let d = t - s;
                if d > e {
                    xi * (e * (d - e) + 0.5 * e * e)
                } else if d < -e {
                    xi * (-e * (d + e) + 0.5 * e * e)
                } else {
                    xi * 0.5 * d * d
                }
            }
        }
    }

    /// Scalar derivative `p_i'(t)`.
    pub fn derivative_at(&self, t: f64) -> f64 {
        match self.kind {
            PenaltyKind::QuadraticShifted => 2.0 * self.rho * (t - 1.0),
            PenaltyKind::NaturalQuadratic => t - (2.0 * self.rho).sqrt(),
            PenaltyKind::HuberShifted => {
                let s = (2.0 * self.rho).sqrt();
                let e = self.huber_eps.unwrap_or(f64::NAN);
                let xi = self.scale();
                let d = t - s;
                if d > e {
                    xi * e
                } else if d < -e {
                    -xi * e
                } else {
                    xi * d
                }
            }
        }
    }

    /// Scalar second derivative; piecewise constant for the Huber kind.
    pub fn second_derivative_at(&self, t: f64) -> f64 {
        match self.kind {
            PenaltyKind::QuadraticShifted => 2.0 * self.rho,
            PenaltyKind::NaturalQuadratic => 1.0,
            PenaltyKind::HuberShifted => {
                let s = (2.0 * self.rho).sqrt();
                let e = self.huber_eps.unwrap_or(f64::NAN);
                if (t - s).abs() <= e {
                    self.scale()
                } else {
                    0.0
                }
            }
        }
    }

    fn check_input(&self, y: &[f64]) -> Result<(), PenaltyError> {
        if y.len() != self.n {
            return Err(PenaltyError::DimMismatch { expected: self.n, got: y.len() });
        }
        match y.iter().position(|t| !t.is_finite()) {
            Some(i) => Err(PenaltyError::NonFinite(i)),
            None => Ok(()),
        }
    }

    /// `p(y) = sum_i p_i(y_i)`.
    pub fn value(&self, y: &[f64]) -> Result<f64, PenaltyError> {
        self.check_input(y)?;
        Ok(y.iter().map(|&t| self.value_at(t)).sum())
    }

    /// Componentwise derivative of `p`; zero exactly at the minimizer.
    pub fn gradient(&self, y: &[f64]) -> Result<Vec<f64>, PenaltyError> {
        self.check_input(y)?;
        Ok(y.iter().map(|&t| self.derivative_at(t)).collect())
    }

    /// In-place gradient for the inner-solver hot path (no input checks).
    pub(crate) fn gradient_into(&self, y: &[f64], out: &mut [f64]) {
        for (o, &t) in out.iter_mut().zip(y) {
            *o = self.derivative_at(t);
        }
    }

    /// Minimizer data: per-component `s`, per-component `m`, and the sum `M`.
    pub fn minimizer(&self) -> (Vec<f64>, Vec<f64>, f64) {
        let s = self.minimizer_point();
        let m = self.minimizer_value();
        (vec![s; self.n], vec![m; self.n], m * self.n as f64)
    }

    /// Numeric enforcement of the family axioms on a 1-D grid plus the
    /// exact points `0` and `s`. Empty report means valid.
    pub fn validate(&self) -> Vec<AxiomViolation> {
        let mut out = Vec::new();
        if self.kind == PenaltyKind::HuberShifted {
            let xi = self.scale();
            if !(xi > 0.0 && xi.is_finite()) {
                out.push(AxiomViolation::NonpositiveScale { xi });
            }
        }
        let s = self.minimizer_point();
        let span = 3.0 * s.max(1.0);
        let lo = (s - span).min(0.0) - 1.0;
        let hi = s + span;
        let m = 400usize;
        let step = (hi - lo) / m as f64;
        let mut grid: Vec<f64> = (0..=m).map(|i| lo + i as f64 * step).collect();
        grid.push(0.0);
        grid.push(s);
        if let Some(e) = self.huber_eps {
            grid.push(s - e);
            grid.push(s + e);
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

        // Convexity: secant slopes nondecreasing along the grid.
        let vals: Vec<f64> = grid.iter().map(|&t| self.value_at(t)).collect();
        let mut prev_slope = f64::NEG_INFINITY;
        for w in 0..grid.len() - 1 {
            let dt = grid[w + 1] - grid[w];
            if dt <= 0.0 {
                continue;
            }
            let slope = (vals[w + 1] - vals[w]) / dt;
            if slope < prev_slope - 1e-9 * (1.0 + slope.abs()) {
                out.push(AxiomViolation::Convexity { at: grid[w] });
                break;
            }
            prev_slope = slope;
        }

        // Unique minimizer: strict decrease left of s, strict increase right.
        let ps = self.value_at(s);
        for w in 0..grid.len() - 1 {
            let (a, b) = (grid[w], grid[w + 1]);
            if b <= s && self.value_at(b) >= self.value_at(a) && b < s - 1e-12 {
                out.push(AxiomViolation::MinimizerNotUnique { at: a });
                break;
            }
            if a >= s && self.value_at(b) <= self.value_at(a) && a > s + 1e-12 {
                out.push(AxiomViolation::MinimizerNotUnique { at: a });
                break;
            }
        }
        for &t in &grid {
            if (t - s).abs() > 1e-9 && self.value_at(t) <= ps {
                out.push(AxiomViolation::MinimizerNotUnique { at: t });
                break;
            }
        }

        // Scaling axiom, exact points.
        let err = (self.value_at(0.0) - ps - self.rho).abs();
        if err > 1e-12 {
            out.push(AxiomViolation::Scaling { error: err });
        }
        out.dedup_by(|a, b| std::mem::discriminant(a) == std::mem::discriminant(b));
        out
    }
}

/// Central finite difference of the scalar term, used by tests.
pub fn fd_derivative(spec: &PenaltySpec, t: f64, h: f64) -> f64 {
    (spec.value_at(t + h) - spec.value_at(t - h)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quadratic_value_example() {
        let p = PenaltySpec::quadratic(1.0, 2);
        assert_eq!(p.value(&[1.0, 1.0]).unwrap(), -2.0);
    }

    #[test]
    fn natural_value_at_minimizer() {
        let p = PenaltySpec::natural(2.0, 1);
        assert_eq!(p.value(&[2.0]).unwrap(), 0.0);
        assert_eq!(p.minimizer_point(), 2.0);
    }

    #[test]
    fn huber_value_at_zero_equals_rho() {
        let p = PenaltySpec::huber(1.0, 0.1, 1).unwrap();
        let v = p.value(&[0.0]).unwrap();
        assert!((v - 1.0).abs() <= 1e-12, "p(0) = {v}");
    }

    #[test]
    fn gradient_examples() {
        let q = PenaltySpec::quadratic(1.0, 1);
        assert_eq!(q.gradient(&[1.0]).unwrap(), vec![0.0]);

        let nat = PenaltySpec::natural(2.0, 1);
        assert_eq!(nat.gradient(&[0.0]).unwrap(), vec![-2.0]);

        let hub = PenaltySpec::huber(1.0, 0.1, 1).unwrap();
        let xi = 1.0 / (0.1 * 2.0_f64.sqrt() - 0.005);
        let g = hub.gradient(&[2.0_f64.sqrt() + 1.0]).unwrap();
        assert!((g[0] - xi * 0.1).abs() <= 1e-12);
    }

    #[test]
    fn minimizer_examples() {
        let (s, m, big_m) = PenaltySpec::quadratic(1.0, 3).minimizer();
        assert_eq!(s, vec![1.0; 3]);
        assert_eq!(m, vec![-1.0; 3]);
        assert_eq!(big_m, -3.0);

        let (s, m, big_m) = PenaltySpec::natural(2.0, 2).minimizer();
        assert_eq!(s, vec![2.0; 2]);
        assert_eq!(m, vec![0.0; 2]);
        assert_eq!(big_m, 0.0);

        let (s, m, big_m) = PenaltySpec::huber(1.0, 0.1, 1).unwrap().minimizer();
        assert!((s[0] - 2.0_f64.sqrt()).abs() <= 1e-15);
        assert_eq!(m, vec![0.0]);
        assert_eq!(big_m, 0.0);
    }

    #[test]
    fn validate_flags_oversized_huber_eps() {
        assert!(PenaltySpec::natural(1.0, 1).validate().is_empty());
        assert!(PenaltySpec::huber(1.0, 0.1, 1).unwrap().validate().is_empty());

        // eps = 2.0 > sqrt(2 rho): t = 0 lands in the central branch and
        // the scaling axiom breaks.
        let bad = PenaltySpec::huber(1.0, 2.0, 1).unwrap();
        let report = bad.validate();
        assert!(!report.is_empty(), "eps >= sqrt(2 rho) must be invalid");
        assert!(report.iter().any(|v| matches!(v, AxiomViolation::Scaling { .. })));

        // eps > 2 sqrt(2 rho) flips the sign of the scale factor itself.
        let worse = PenaltySpec::huber(1.0, 3.0, 1).unwrap();
        let report = worse.validate();
        assert!(report
            .iter()
            .any(|v| matches!(v, AxiomViolation::NonpositiveScale { .. })));
    }

    #[test]
    fn second_derivative_positive_at_minimizer() {
        // The second-order theory needs curvature at the minimizer; all
        // three members are strongly convex there.
        for spec in [
            PenaltySpec::quadratic(0.7, 1),
            PenaltySpec::natural(0.7, 1),
            PenaltySpec::huber(0.7, 0.2, 1).unwrap(),
        ] {
            let s = spec.minimizer_point();
            assert!(spec.second_derivative_at(s) > 0.0);
        }
    }

    #[test]
    fn non_finite_input_is_domain_error() {
        let p = PenaltySpec::natural(1.0, 2);
        assert_eq!(p.value(&[1.0, f64::NAN]), Err(PenaltyError::NonFinite(1)));
        assert_eq!(p.gradient(&[f64::INFINITY, 0.0]), Err(PenaltyError::NonFinite(0)));
    }

    fn arb_spec() -> impl Strategy<Value = PenaltySpec> {
        (0usize..3, 1e-3f64..10.0, 1e-3f64..0.9).prop_map(|(k, rho, efrac)| {
            let s2 = (2.0 * rho).sqrt();
            match k {
                0 => PenaltySpec::quadratic(rho, 1),
                1 => PenaltySpec::natural(rho, 1),
                _ => PenaltySpec::huber(rho, efrac * s2, 1).unwrap(),
            }
        })
    }

    proptest! {
        #[test]
        fn scaling_axiom_exact(spec in arb_spec()) {
            let s = spec.minimizer_point();
            let err = (spec.value_at(0.0) - spec.value_at(s) - spec.rho).abs();
            prop_assert!(err <= 1e-12);
        }

        #[test]
        fn gradient_matches_finite_differences(spec in arb_spec(), t in -3.0f64..6.0) {
            let h = 1e-6;
            // Stay away from the Huber kinks where the FD stencil straddles
            // two branches.
            if let Some(e) = spec.huber_eps {
                let s = spec.minimizer_point();
                let d = (t - s).abs();
                if (d - e).abs() <= 10.0 * h {
                    return Ok(());
                }
            }
            let fd = fd_derivative(&spec, t, h);
            let g = spec.derivative_at(t);
            prop_assert!((g - fd).abs() <= 1e-6 * (1.0 + fd.abs()), "g={g} fd={fd}");
        }

        #[test]
        fn derivative_is_monotone(spec in arb_spec(), a in -3.0f64..6.0, b in -3.0f64..6.0) {
            let (t1, t2) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(spec.derivative_at(t2) - spec.derivative_at(t1) >= -1e-12);
        }
    }
}
