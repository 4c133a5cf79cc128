//! Invariants that need whole solves or several resolutions: touching-test
//! soundness under refinement, oracle consistency, continuation behaviour,
//! and the free boundary and Hölder measurements.

use std::sync::Arc;

use freetrans::degeneracy::{theta_field, DegeneracyParams, ExponentField};
use freetrans::grid::{gradient_central, Domain, DomainSpec, GridFunction};
use freetrans::regularity::{estimate_gradient_holder_within, extract_free_boundary};
use freetrans::solver::{
    continuation, fixed_point_t, scale_problem, solve_with_exponent, Problem, SolveConfig, SolveDiagnostics,
};
use freetrans::verification::{
    touch_test_subsolution, touch_test_supersolution, OnePhaseOracle, TouchingTestConfig, TwoPhaseOracle,
};

fn interval(h: f64) -> Arc<Domain> {
    Domain::build(DomainSpec::interval(1.0, h)).unwrap()
}

fn square(h: f64) -> Arc<Domain> {
    Domain::build(DomainSpec::square(1.0, h)).unwrap()
}

const LEVELS: [f64; 3] = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];

/// Failure fraction of both touching tests on `u`.
fn failure_rate(u: &GridFunction, c0: f64, theta2: f64, op: &freetrans::operators::EllipticOperator) -> f64 {
    let cfg = TouchingTestConfig::default();
    let sub = touch_test_subsolution(u, c0, theta2, op, &cfg).unwrap();
    let sup = touch_test_supersolution(u, c0, theta2, op, &cfg).unwrap();
    let evaluated = sub.records.len() + sup.records.len();
    assert!(evaluated > 0);
    (sub.failures() + sup.failures()) as f64 / evaluated as f64
}

#[test]
fn touching_failures_vanish_under_refinement_on_exact_solutions() {
    let mut lines = Vec::new();
    for (theta, dim) in [(1.0, 1), (0.5, 2), (3.0, 2)] {
        let oracle = OnePhaseOracle::new(theta, dim).unwrap();
        let rates: Vec<f64> = LEVELS
            .iter()
            .map(|&h| {
                let domain = if dim == 1 { interval(h) } else { square(h) };
                let (u, f) = oracle.sample(&domain).unwrap();
                failure_rate(&u, f.sup_norm(), theta, &oracle.operator())
            })
            .collect();
        lines.push(format!("one-phase theta={theta} d={dim}: {rates:?}"));
        assert!(rates.windows(2).all(|w| w[1] <= w[0]), "{lines:?}");
        assert_eq!(*rates.last().unwrap(), 0.0, "{lines:?}");
    }
    let oracle = TwoPhaseOracle::new(1.0, 3.0).unwrap();
    let rates: Vec<f64> = LEVELS
        .iter()
        .map(|&h| {
            let (u, _) = oracle.sample(&interval(h)).unwrap();
            failure_rate(&u, oracle.source_sup(), 3.0, &oracle.operator())
        })
        .collect();
    assert!(rates.windows(2).all(|w| w[1] <= w[0]) && rates[2] == 0.0, "two-phase: {rates:?}");
}

#[test]
fn oracle_residuals_are_exact_and_discretely_consistent() {
    for (theta, dim) in [(1.0, 1), (3.0, 2), (0.5, 2)] {
        let oracle = OnePhaseOracle::new(theta, dim).unwrap();
        let op = oracle.operator();
        let order = oracle.alpha.min(1.0);
        let mut scaled = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
            let domain = if dim == 1 { interval(h) } else { square(h) };
            let (u, f) = oracle.sample(&domain).unwrap();
            let mut exact: f64 = 0.0;
            let mut discrete: f64 = 0.0;
            for &i in domain.interior() {
                let x = domain.coords(i);
                if x.iter().map(|c| c * c).sum::<f64>().sqrt() < 4.0 * h {
                    continue;
                }
                exact = exact.max(oracle.exact_residual(x).abs());
                let g = gradient_central(&u, i).unwrap();
                let slope = (g[0] * g[0] + g[1] * g[1]).sqrt();
                let r = slope.powf(theta) * op.apply_discrete(&u, i).unwrap() - f.value(i);
                discrete = discrete.max(r.abs());
            }
            assert!(exact <= 1e-8, "theta={theta} d={dim} h={h}: exact residual {exact}");
            scaled.push(discrete / h.powf(order));
        }
        // Bounded by C h^{min(α,1)}: the normalized residual does not grow.
        assert!(
            scaled.iter().all(|&s| s <= 2.0 * scaled[0]),
            "theta={theta} d={dim}: residual / h^alpha = {scaled:?}"
        );
    }
    let two = TwoPhaseOracle::new(1.0, 3.0).unwrap();
    for x in [-0.9, -0.3, -0.05, 0.05, 0.4, 0.95] {
        assert!(two.exact_residual(x).abs() < 1e-10, "x={x}: {}", two.exact_residual(x));
    }
}

#[test]
fn sampled_two_phase_oracle_has_its_free_boundary_at_the_origin() {
    let h = 1.0 / 32.0;
    let (u, _) = TwoPhaseOracle::new(1.0, 3.0).unwrap().sample(&interval(h)).unwrap();
    let phases = extract_free_boundary(&u, 0.0);
    assert!(!phases.free_boundary.is_empty());
    for &i in &phases.free_boundary {
        assert!(u.domain().coords(i)[0].abs() <= h + 1e-12);
    }
}

#[test]
fn holder_exponent_survives_rescaling() {
    let oracle = TwoPhaseOracle::new(1.0, 3.0).unwrap();
    let (u, _) = oracle.sample(&interval(1.0 / 1024.0)).unwrap();
    let before = estimate_gradient_holder_within(&u, &[0.0, 0.0], 1.0, 0.5, 5).unwrap();
    let (v, consts, _) = scale_problem(&u, oracle.source_sup(), 3.0, 0.5, None, &oracle.operator()).unwrap();
    assert!(consts.k > 0.0);
    let after = estimate_gradient_holder_within(&v, &[0.0, 0.0], 1.0, 0.5, 5).unwrap();
    let (a, b) = (before.alpha_hat().unwrap(), after.alpha_hat().unwrap());
    assert!((a - b).abs() <= 0.05, "alpha_hat {a} before, {b} after rescaling");
}

#[test]
fn one_phase_solution_is_close_at_small_regularization() {
    // ε = 10⁻³ needs h ≤ ε.
    let h = 1.0 / 1024.0;
    let eps = 1e-3;
    let domain = interval(h);
    let oracle = OnePhaseOracle::new(1.0, 1).unwrap();
    let (exact, f) = oracle.sample(&domain).unwrap();
    let problem = Problem::new(f, exact.clone(), oracle.operator()).unwrap();
    let params = DegeneracyParams::new(1.0, 1.0, eps).unwrap();
    let (fp, _) = fixed_point_t(&problem, &params, &SolveConfig::default()).unwrap();
    let err = fp.u.sup_distance(&exact);
    assert!(err <= h.sqrt() + eps, "sup-error {err}");
}

#[test]
fn positive_solution_is_a_one_phase_fixed_point() {
    let h = 1.0 / 32.0;
    let domain = interval(h);
    let f = GridFunction::constant(domain.clone(), -0.1);
    let g = GridFunction::constant(domain.clone(), 1.0);
    let op = freetrans::operators::EllipticOperator::negative_trace(1);
    let problem = Problem::new(f, g, op).unwrap();
    let cfg = SolveConfig::default();
    let params = DegeneracyParams::new(0.5, 2.0, h).unwrap();
    let (fp, _) = fixed_point_t(&problem, &params, &cfg).unwrap();
    assert!(fp.u.values().iter().all(|&v| v >= h));
    let theta = theta_field(&fp.u, &params).unwrap();
    assert!(theta.values().iter().all(|&t| t == 0.5));
    let frozen = ExponentField::constant(domain.clone(), 0.5);
    let mut diagnostics = SolveDiagnostics::default();
    let again = solve_with_exponent(&frozen, h, &problem, &cfg, None, 0, &mut diagnostics).unwrap();
    assert!(again.u.sup_distance(&fp.u) <= cfg.tol_fixed_point);
}

#[test]
fn odd_data_gives_an_odd_fixed_point() {
    let domain = interval(1.0 / 32.0);
    let f = GridFunction::from_fn(domain.clone(), |x| -0.8 * x[0]).unwrap();
    let g = GridFunction::from_fn(domain.clone(), |x| x[0]).unwrap();
    let problem = Problem::new(f, g, freetrans::operators::EllipticOperator::negative_trace(1)).unwrap();
    let cfg = SolveConfig::default();
    let params = DegeneracyParams::new(1.0, 1.0, 0.1).unwrap();
    let (fp, _) = fixed_point_t(&problem, &params, &cfg).unwrap();
    let n = domain.node_count();
    let asym = (0..n)
        .map(|i| (fp.u.value(i) + fp.u.value(n - 1 - i)).abs())
        .fold(0.0, f64::max);
    assert!(asym <= 10.0 * cfg.tol_fixed_point, "asymmetry {asym}");
}

fn two_phase_continuation(h: f64) -> (GridFunction, GridFunction, freetrans::solver::ContinuationResult) {
    let oracle = TwoPhaseOracle::new(1.0, 3.0).unwrap();
    let (exact, f) = oracle.sample(&interval(h)).unwrap();
    let problem = Problem::new(f, exact.clone(), oracle.operator()).unwrap();
    let res = continuation(&problem, 1.0, 3.0, &SolveConfig::default()).unwrap();
    (res.u.clone(), exact, res)
}

#[test]
fn continuation_changes_settle_after_burn_in() {
    for h in [1.0 / 64.0, 1.0 / 128.0] {
        let (_, _, res) = two_phase_continuation(h);
        let deltas: Vec<f64> = res.diagnostics.continuation.iter().map(|r| r.delta).collect();
        let settled = &deltas[deltas.len().min(2)..];
        assert!(settled.windows(2).all(|w| w[1] <= 2.0 * w[0]), "h={h}: {deltas:?}");
    }
}

#[test]
fn two_phase_continuation_approaches_the_oracle_under_refinement() {
    let errors: Vec<f64> = [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0]
        .iter()
        .map(|&h| {
            let (u, exact, _) = two_phase_continuation(h);
            u.sup_distance(&exact)
        })
        .collect();
    assert!(
        errors.windows(2).all(|w| w[1] < w[0]) && errors[2] < 0.5 * errors[0],
        "sup-errors under joint refinement: {errors:?}"
    );
}

#[test]
fn free_boundary_of_two_phase_solution_approaches_the_origin() {
    for h in [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0] {
        let (u, _, _) = two_phase_continuation(h);
        let phases = extract_free_boundary(&u, 0.0);
        let far = phases
            .free_boundary
            .iter()
            .map(|&i| u.domain().coords(i)[0].abs())
            .fold(0.0, f64::max);
        assert!(!phases.free_boundary.is_empty() && far <= 2.0 * h, "h={h}: free boundary reaches |x| = {far}");
    }
}
