//! Acceptance suite: one test per criterion, each printing a pass line.
//! The three benchmark sweeps (portfolio, basis pursuit, dictionary) are
//! computed once and shared by the criteria that consume them.

use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spars0_core::apps::*;
use spars0_core::oracle::ConstraintRow;
use spars0_core::penalty::{PenaltyKind, PenaltySpec};
use spars0_core::problem::{build_penalized, l0_objective, y_star, SparseProblem};
use spars0_core::split::split_free_variables;
use spars0_core::stationarity::{
    as_trace, best_multiplier_residual, biactive_masked, check_sp_mfcq, s_residual,
};
use spars0_core::*;

const ZERO_TOL: f64 = 1e-6;

struct PortfolioRun {
    problem: Arc<SparseProblem>,
    report: SolveReport,
    oracle: OracleResult,
}

struct SimpleRun {
    problem: Arc<SparseProblem>,
    report: SolveReport,
    start_l0_objective: f64,
}

struct BenchCache {
    portfolio: Vec<PortfolioRun>,
    basis_pursuit: Vec<SimpleRun>,
    dictionary: Vec<SimpleRun>,
}

fn outer_cfg(alpha0: f64, beta: f64, seed: u64) -> OuterConfig {
    OuterConfig {
        alpha0,
        beta,
        seed,
        zero_tol: Some(ZERO_TOL),
        ..OuterConfig::default()
    }
}

fn bench_cache() -> &'static BenchCache {
    static CACHE: OnceLock<BenchCache> = OnceLock::new();
    CACHE.get_or_init(|| {
        let portfolio = (0..30u64)
            .map(|seed| {
                let inst = gen_portfolio(8, seed, 1.0, 0.95);
                let problem = Arc::new(build_portfolio(&inst).unwrap());
                let oracle = enumerate_supports(&problem, 14).unwrap();
                let cfg = outer_cfg(inst.alpha0, 1.1, seed);
                let report =
                    solve(Arc::clone(&problem), &PenaltySpec::natural(1.0, 8), &cfg, None)
                        .unwrap();
                PortfolioRun { problem, report, oracle }
            })
            .collect();

        let basis_pursuit = (0..50u64)
            .map(|seed| {
                let inst =
                    gen_basis_pursuit(32, 128, 4, 0.1, 0.1, seed, EntryDistribution::Uniform01);
                let problem = Arc::new(build_basis_pursuit(&inst).unwrap());
                let cfg = outer_cfg(1.0, 1.1, seed);
                let x0 = vec![0.0; 128];
                let y0 = vec![1.0; 128];
                let report = solve(
                    Arc::clone(&problem),
                    &PenaltySpec::natural(1.0, 128),
                    &cfg,
                    Some((&x0, &y0)),
                )
                .unwrap();
                SimpleRun { problem, report, start_l0_objective: f64::NAN }
            })
            .collect();

        let dictionary = (0..20u64)
            .map(|seed| {
                let inst = gen_dictionary(10, 20, 30, 3, 0.1, seed);
                let problem = Arc::new(build_dictionary(&inst).unwrap());
                let pen = PenaltySpec::natural(0.1, problem.num_masked());
                let (x0, y0) = dictionary_start(&problem, pen.minimizer_point(), seed);
                let start_l0_objective = l0_objective(&problem, &x0, ZERO_TOL);
                let cfg = outer_cfg(0.1, 10.0, seed);
                let report =
                    solve(Arc::clone(&problem), &pen, &cfg, Some((&x0, &y0))).unwrap();
                SimpleRun { problem, report, start_l0_objective }
            })
            .collect();

        BenchCache { portfolio, basis_pursuit, dictionary }
    })
}

fn random_penalty(rng: &mut ChaCha8Rng) -> PenaltySpec {
    let rho = 0.05 + 5.0 * rng.gen::<f64>();
    match rng.gen_range(0..3) {
        0 => PenaltySpec::quadratic(rho, 1),
        1 => PenaltySpec::natural(rho, 1),
        _ => {
            let eps = (0.02 + 0.9 * rng.gen::<f64>()) * (2.0 * rho).sqrt();
            PenaltySpec::huber(rho, eps, 1).unwrap()
        }
    }
}

#[test]
fn c01_penalty_family_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for kind in [
        PenaltyKind::QuadraticShifted,
        PenaltyKind::NaturalQuadratic,
        PenaltyKind::HuberShifted,
    ] {
        for _ in 0..1000 {
            let rho = 0.05 + 5.0 * rng.gen::<f64>();
            let eps = (0.02 + 0.9 * rng.gen::<f64>()) * (2.0 * rho).sqrt();
            let spec = PenaltySpec::new(
                kind,
                rho,
                if kind == PenaltyKind::HuberShifted { Some(eps) } else { None },
                1,
            )
            .unwrap();
            let violations = spec.validate();
            assert!(violations.is_empty(), "{kind:?} rho={rho} eps={eps}: {violations:?}");
            let s = spec.minimizer_point();
            let err = (spec.value_at(0.0) - spec.value_at(s) - rho).abs();
            assert!(err <= 1e-12, "{kind:?} rho={rho}: scaling error {err}");
        }
    }
    println!("criterion 1 (penalty family axioms, 3 kinds x 1000 draws): PASS");
}

#[test]
fn c02_reformulation_inequality_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..30_000 {
        let spec = random_penalty(&mut rng);
        let n = rng.gen_range(2..8usize);
        let spec = spec.with_dim(n);
        let s = spec.minimizer_point();
        let (_, _, big_m) = spec.minimizer();

        // Complementary pair: y lives on the zero set of x only.
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut tight = true;
        let perturb = rng.gen_bool(0.5);
        for i in 0..n {
            if rng.gen_bool(0.5) {
                x[i] = 0.1 + rng.gen::<f64>();
            } else if perturb && rng.gen_bool(0.4) {
                y[i] = s + 0.01 + rng.gen::<f64>();
                tight = false;
            } else {
                y[i] = s;
            }
        }
        let nnz = x.iter().filter(|v| v.abs() > 1e-12).count();
        let lhs = spec.rho * nnz as f64;
        let rhs = spec.value(&y).unwrap() - big_m;
        assert!(lhs <= rhs + 1e-10, "lhs {lhs} rhs {rhs}");
        if tight {
            assert!((lhs - rhs).abs() <= 1e-10, "expected tight: {lhs} vs {rhs}");
        } else {
            assert!(rhs - lhs > 1e-10, "expected slack: {lhs} vs {rhs}");
        }
    }
    println!("criterion 2 (reformulation inequality, 10k pairs per kind): PASS");
}

#[test]
fn c03_closed_form_stationary_family() {
    let s2 = 2.0_f64.sqrt();
    for alpha in [1.0, 2.0, 5.0] {
        let problem = Arc::new(neg_linear(1.0).unwrap());
        let sub = build_penalized(problem, PenaltySpec::natural(1.0, 1), alpha).unwrap();
        let x = (s2 - 1.0 / alpha) / alpha;
        let y = 1.0 / alpha;
        let ev = step2_eval(&sub, &[x], &[y], &[], &[], 1e-12);
        assert!(
            ev.residuals.max() <= 1e-10,
            "alpha={alpha}: residuals {:?}",
            ev.residuals
        );
        let (rx, ry) = multiplier_free_residuals(&sub, &[x], &[y], &[], &[]);
        assert!(rx <= 1e-10 && ry <= 1e-10, "alpha={alpha}: free residuals {rx}, {ry}");
    }

    // Solver trace from the alpha = 1 family point: iterations that stay
    // interior must follow the closed-form family, and their
    // complementarity value must match it.
    let problem = Arc::new(neg_linear(1.0).unwrap());
    let cfg = outer_cfg(1.0, 2.0, 0);
    let x0 = [s2 - 1.0];
    let y0 = [1.0];
    let report = solve(
        Arc::clone(&problem),
        &PenaltySpec::natural(1.0, 1),
        &cfg,
        Some((&x0, &y0)),
    )
    .unwrap();
    let mut interior_count = 0;
    for (entry, (x, y)) in report.trace.iter().zip(&report.iterates) {
        if x[0] > 1e-6 && y[0] > 1e-6 {
            interior_count += 1;
            let fam_x = (s2 - 1.0 / entry.alpha) / entry.alpha;
            let fam_y = 1.0 / entry.alpha;
            assert!((x[0] - fam_x).abs() <= 1e-6, "k={}: x off family", entry.k);
            assert!((y[0] - fam_y).abs() <= 1e-6, "k={}: y off family", entry.k);
            assert!(
                (entry.comp - fam_x * fam_y).abs() <= 1e-6,
                "k={}: comp {} vs family {}",
                entry.k,
                entry.comp,
                fam_x * fam_y
            );
        }
    }
    assert!(interior_count >= 1, "no interior iterations observed");
    assert_eq!(report.termination, Termination::Step3);
    assert!(report.comp <= 1e-6);
    println!("criterion 3 (closed-form stationarity, alpha in {{1,2,5}}): PASS");
}

#[test]
fn c04_oracle_equivalence_portfolio() {
    let cache = bench_cache();
    let mut matched = 0;
    for run in &cache.portfolio {
        let rel = (run.report.l0_objective - run.oracle.best_value).abs()
            / (1.0 + run.oracle.best_value.abs());
        if rel <= 1e-4 {
            matched += 1;
        }
        assert!(
            run.report.l0_objective >= run.oracle.best_value - 1e-6,
            "solver value {} beats the certified global {} on {}",
            run.report.l0_objective,
            run.oracle.best_value,
            run.problem.name
        );
    }
    assert!(
        matched * 10 >= cache.portfolio.len() * 8,
        "only {matched}/30 matched the oracle"
    );
    println!("criterion 4 (oracle equivalence, {matched}/30 matches): PASS");
}

#[test]
fn c05_feasibility_in_the_limit() {
    let cache = bench_cache();
    let all: Vec<&SolveReport> = cache
        .portfolio
        .iter()
        .map(|r| &r.report)
        .chain(cache.basis_pursuit.iter().map(|r| &r.report))
        .chain(cache.dictionary.iter().map(|r| &r.report))
        .collect();
    let mut max_outer_exits = 0;
    for report in all {
        match report.termination {
            Termination::Step3 => {
                assert!(report.comp <= 1e-6, "step3 exit with comp {}", report.comp)
            }
            Termination::MaxOuter => {
                max_outer_exits += 1;
                let comps: Vec<f64> = report.trace.iter().map(|e| e.comp).collect();
                let tail = &comps[comps.len().saturating_sub(5)..];
                assert!(
                    tail.windows(2).all(|w| w[1] <= w[0] + 1e-12),
                    "comp not nonincreasing on the last 5 iterations: {tail:?}"
                );
            }
            Termination::InnerFailure => panic!("inner failure in bench runs"),
        }
    }
    println!(
        "criterion 5 (terminal complementarity over 100 runs, {max_outer_exits} max-outer exits): PASS"
    );
}

#[test]
fn c06_s_stationarity_at_termination() {
    let cache = bench_cache();
    let runs: Vec<(&Arc<SparseProblem>, &SolveReport)> = cache
        .portfolio
        .iter()
        .map(|r| (&r.problem, &r.report))
        .chain(cache.basis_pursuit.iter().map(|r| (&r.problem, &r.report)))
        .chain(cache.dictionary.iter().map(|r| (&r.problem, &r.report)))
        .collect();
    for (problem, report) in runs {
        if report.termination != Termination::Step3 {
            continue;
        }
        let best = best_multiplier_residual(problem, &report.x, ZERO_TOL);
        assert!(
            best.residual <= 1e-5,
            "{}: best multiplier residual {}",
            problem.name,
            best.residual
        );
        let biactive = biactive_masked(problem, &report.x, &report.y, ZERO_TOL);
        assert!(biactive.is_empty(), "{}: biactive {biactive:?}", problem.name);
    }
    println!("criterion 6 (S-stationarity and empty biactive set at step-3 exits): PASS");
}

#[test]
fn c07_basis_pursuit_desk_run() {
    let cache = bench_cache();
    let mut sparse_enough = 0;
    for run in &cache.basis_pursuit {
        let g = run.problem.eval_g(&run.report.x);
        assert!(g[0] <= 1e-8, "{}: residual ball violated by {}", run.problem.name, g[0]);
        if run.report.support.len() <= 4 {
            sparse_enough += 1;
        }
    }
    assert!(
        sparse_enough * 10 >= cache.basis_pursuit.len() * 7,
        "only {sparse_enough}/50 instances reached the planted sparsity"
    );
    println!("criterion 7 (basis pursuit: 50/50 feasible, {sparse_enough}/50 sparse): PASS");
}

#[test]
fn c08_dictionary_learning() {
    let cache = bench_cache();
    for run in &cache.dictionary {
        assert!(run.report.comp <= 1e-6, "comp {}", run.report.comp);
        assert!(
            run.report.l0_objective <= run.start_l0_objective,
            "objective {} above start {}",
            run.report.l0_objective,
            run.start_l0_objective
        );
        let proj = run.report.residuals.stat_proj.expect("dictionary runs carry a block");
        assert!(proj <= 1e-3, "projected-gradient residual {proj}");
    }
    println!("criterion 8 (dictionary learning, 20 seeded runs): PASS");
}

#[test]
fn c09_penalized_quadratic_definiteness_boundary() {
    for seed in 0..20u64 {
        let inst = gen_portfolio(6, seed, 1.0, 0.95);
        let bound = (2.0 * inst.lambda_min).sqrt();
        let below = min_eigenvalue(&qhat(&inst.q, 0.95 * bound));
        let above = min_eigenvalue(&qhat(&inst.q, 1.05 * bound));
        assert!(below > 1e-10, "seed {seed}: min eig {below} at 0.95 of the bound");
        assert!(above < -1e-10, "seed {seed}: min eig {above} at 1.05 of the bound");
    }
    println!("criterion 9 (penalized quadratic definiteness boundary, 20 matrices): PASS");
}

#[test]
fn c10_counterexample_fixtures() {
    // Unique-feasible-point fixture: not S-stationary but AS-stationary
    // along an unbounded multiplier sequence.
    let p53 = equality_ball(3, 1.0).unwrap();
    let e = vec![1.0; 3];
    let res = s_residual(&p53, &e, &[], &[0.0], ZERO_TOL);
    assert!((res - 1.0).abs() <= 1e-12, "s_residual {res}");
    assert_eq!(check_sp_mfcq(&p53, &e, ZERO_TOL), Some(false));

    let iterates: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (1..=10_000usize)
        .step_by(99)
        .chain(std::iter::once(10_000))
        .map(|k| {
            let kk = k as f64;
            (vec![1.0 - 1.0 / kk, 1.0, 1.0], vec![], vec![kk])
        })
        .collect();
    let trace = as_trace(&p53, &iterates, ZERO_TOL, 1e-3);
    assert!(
        *trace.residuals.last().unwrap() <= 1e-3,
        "final AS residual {}",
        trace.residuals.last().unwrap()
    );
    assert!(trace.consistent);

    // Ball-constrained linear objective: the solver must land at the
    // origin, its only AS-stationary point.
    let p52 = Arc::new(linear_ball(3, 1.0).unwrap());
    let cfg = outer_cfg(1.0, 2.0, 0);
    let report = solve(Arc::clone(&p52), &PenaltySpec::natural(1.0, 3), &cfg, None).unwrap();
    let max_x = report.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(max_x <= 1e-6, "solver ended at {:?}", report.x);
    assert!(report.residuals.feas_g <= 1e-6);
    println!("criterion 10 (counterexample fixtures): PASS");
}

#[test]
fn c11_gradient_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut random_point = |n: usize, lo: f64, hi: f64| -> Vec<f64> {
        (0..n).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect()
    };

    // Portfolio objective and constraint rows.
    let inst = gen_portfolio(8, 0, 1.0, 0.95);
    let p = build_portfolio(&inst).unwrap();
    for _ in 0..20 {
        let x = random_point(8, 0.0, 1.0);
        assert!(gradient_check(p.objective.as_ref(), &x, 1e-6) <= 1e-6);
        let g = p.ineq.as_ref().unwrap();
        assert!(gradient_check(&ConstraintRow { block: g.as_ref(), row: 0 }, &x, 1e-6) <= 1e-6);
        let h = p.eq.as_ref().unwrap();
        assert!(gradient_check(&ConstraintRow { block: h.as_ref(), row: 0 }, &x, 1e-6) <= 1e-6);
    }

    // Basis pursuit residual-ball row.
    let inst = gen_basis_pursuit(16, 32, 3, 0.1, 0.1, 1, EntryDistribution::Uniform01);
    let p = build_basis_pursuit(&inst).unwrap();
    for _ in 0..20 {
        let x = random_point(32, 0.0, 1.0);
        let g = p.ineq.as_ref().unwrap();
        assert!(gradient_check(&ConstraintRow { block: g.as_ref(), row: 0 }, &x, 1e-6) <= 1e-6);
    }

    // Logistic loss over the split variables.
    let data = gen_blobs(25, 6, 3, 2.0);
    let (p, _) = build_logistic(&data, 0.004, 100.0).unwrap();
    for _ in 0..20 {
        let x = random_point(p.n, 0.0, 0.6);
        assert!(gradient_check(p.objective.as_ref(), &x, 1e-6) <= 1e-6);
    }

    // SVM objective and hinge rows.
    let data = gen_blobs(10, 4, 5, 2.0);
    let (p, _) = build_svm(&data, 0.1).unwrap();
    for _ in 0..20 {
        let x = random_point(p.n, 0.0, 0.7);
        assert!(gradient_check(p.objective.as_ref(), &x, 1e-6) <= 1e-9);
        let g = p.ineq.as_ref().unwrap();
        for row in 0..3 {
            assert!(gradient_check(&ConstraintRow { block: g.as_ref(), row }, &x, 1e-6) <= 1e-6);
        }
    }

    // Dictionary loss; the single objective covers both gradient blocks.
    let inst = gen_dictionary(6, 8, 10, 3, 0.1, 7);
    let p = build_dictionary(&inst).unwrap();
    for _ in 0..20 {
        let x = random_point(p.n, -0.5, 0.5);
        assert!(gradient_check(p.objective.as_ref(), &x, 1e-6) <= 1e-6);
    }
    println!("criterion 11 (gradient suites, 20 points per family): PASS");
}

#[test]
fn c12_splitting_semantics() {
    // 1-D quadratic fixture.
    let quad = separable_quadratic(vec![0.0], None, 1.0)
        .unwrap()
        .with_free(&[true], 100.0)
        .unwrap();
    let (split, map) = split_free_variables(&quad).unwrap();
    for lam in [0.0, 1.0, 10.0] {
        let (a, _) = map.back_map(&[lam, lam]);
        assert_eq!(a, vec![0.0]);
    }

    // Solver plus shrink lands on the all-zero representative.
    let cfg = outer_cfg(1.0, 2.0, 0);
    let report = solve(
        Arc::new(split.clone()),
        &PenaltySpec::natural(1.0, 2),
        &cfg,
        None,
    )
    .unwrap();
    let (_, shrunk) = map.back_map(&report.x);
    let nnz = shrunk.iter().filter(|v| v.abs() > 1e-6).count();
    assert_eq!(nnz, 0, "shrunk representative {shrunk:?}");

    // Split and unsplit oracles certify the same global value.
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..10 {
        let targets: Vec<f64> = (0..2).map(|_| -2.0 + 4.0 * rng.gen::<f64>()).collect();
        let rho = 0.2 + 2.0 * rng.gen::<f64>();
        let base = separable_quadratic(targets.clone(), None, rho)
            .unwrap()
            .with_free(&[true, true], 50.0)
            .unwrap();
        let unsplit_oracle = enumerate_supports(&base, 14).unwrap();
        let (split, _) = split_free_variables(&base).unwrap();
        let split_oracle = enumerate_supports(&split, 14).unwrap();
        assert!(
            (unsplit_oracle.best_value - split_oracle.best_value).abs() <= 1e-8,
            "trial {trial}: {} vs {}",
            unsplit_oracle.best_value,
            split_oracle.best_value
        );
    }
    println!("criterion 12 (splitting semantics): PASS");
}

#[test]
fn y_star_places_the_minimizer_on_the_zero_set() {
    let nat = PenaltySpec::natural(2.0, 2);
    assert_eq!(y_star(&[0.0, 3.0], &nat, ZERO_TOL), vec![2.0, 0.0]);
}
