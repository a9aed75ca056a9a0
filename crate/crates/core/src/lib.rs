//! Solver toolkit for l0-penalized nonlinear programs
//!
//! ```text
//!     min  f(x) + rho * ||x||_0
//!     s.t. g(x) <= 0,  h(x) = 0,  0 <= x <= u,
//! ```
//!
//! built around a smooth complementarity reformulation: an auxiliary
//! variable `y >= 0` with `x o y = 0` replaces the discontinuous l0 term
//! through a separable penalty `p(y)`, and the complementarity product is
//! moved into the objective with a growing weight `alpha`. The crate
//! provides
//!
//! * the separable penalty family ([`penalty`]),
//! * problem containers and the reformulation algebra ([`problem`], [`split`]),
//! * an inexact inner solver (spectral projected gradient wrapped in an
//!   augmented Lagrangian, [`inner`]),
//! * the exact penalty outer loop ([`outer`]),
//! * stationarity diagnostics ([`stationarity`]),
//! * a brute-force support-enumeration oracle for desk-scale global
//!   certification ([`oracle`]),
//! * application problem builders and instance generators ([`apps`]),
//! * JSON serialization of problems, points and reports ([`io`]).

pub mod apps;
pub mod inner;
pub mod io;
mod la;
pub mod oracle;
pub mod outer;
pub mod penalty;
pub mod problem;
pub mod split;
pub mod stationarity;

pub use inner::{alm_solve, project_box, step2_eval, AlmConfig, InnerResult, InnerStatus, Step2Eval};
pub use oracle::{enumerate_supports, gradient_check, restricted_solve, OracleResult};
pub use outer::{
    multiplier_free_residuals, solve, step3_check, EpsSchedule, KktResiduals, OuterConfig,
    SolveReport, Termination,
};
pub use penalty::{PenaltyKind, PenaltySpec};
pub use problem::{
    build_penalized, l0_objective, reformulation_gap, y_star, ConstraintBlock, Objective,
    PenalizedSubproblem, SparseProblem, SupportSet,
};
pub use split::{split_free_variables, SplitMap};
