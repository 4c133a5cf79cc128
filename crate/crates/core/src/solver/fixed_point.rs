use crate::degeneracy::{theta_field, DegeneracyParams, ExponentField};
use crate::error::{Error, Result};
use crate::grid::{gradient_central, GridFunction};

use super::regularized::{residual_sup, solve_with_exponent};
use super::{ContinuationRecord, OuterRecord, Problem, SolveConfig, SolveDiagnostics};

/// A fixed point of `T` at one ε.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub u: GridFunction,
    pub epsilon: f64,
    pub outer_iterations: usize,
    /// Residual of `u` against the exponent field built from `u` itself.
    pub certificate: f64,
    /// First-order bound on how much of `certificate` the final Picard
    /// increment can explain.
    pub certificate_allowance: f64,
}

#[derive(Debug, Clone)]
pub struct ContinuationResult {
    pub u: GridFunction,
    pub epsilon: f64,
    pub diagnostics: SolveDiagnostics,
}

/// Runs the Picard iteration of `T` at `params.epsilon`, starting from the
/// frozen-midpoint-exponent solve.
pub fn fixed_point_t(
    problem: &Problem,
    params: &DegeneracyParams,
    cfg: &SolveConfig,
) -> Result<(FixedPoint, SolveDiagnostics)> {
    let mut diagnostics = SolveDiagnostics::default();
    let fp = fixed_point_t_from(problem, params, cfg, None, &mut diagnostics)?;
    Ok((fp, diagnostics))
}

/// Picard iteration of `T` from `start` (or from the midpoint-exponent solve
/// when `start` is `None`). Records go into `diagnostics`.
pub fn fixed_point_t_from(
    problem: &Problem,
    params: &DegeneracyParams,
    cfg: &SolveConfig,
    start: Option<&GridFunction>,
    diagnostics: &mut SolveDiagnostics,
) -> Result<FixedPoint> {
    params.validate()?;
    cfg.validate()?;
    let eps = params.epsilon;
    let domain = problem.domain().clone();

    let mut v = match start {
        Some(s) => {
            if !std::sync::Arc::ptr_eq(s.domain(), &domain) {
                return Err(Error::ShapeMismatch("warm start lives on another domain".into()));
            }
            s.clone()
        }
        None => {
            let mid = ExponentField::constant(domain.clone(), params.midpoint());
            solve_with_exponent(&mid, eps, problem, cfg, None, 0, diagnostics)?.u
        }
    };

    let mut damping = cfg.damping;
    let mut previous_delta = f64::INFINITY;
    let mut rising = 0;
    for k in 1..=cfg.max_outer_iters {
        let theta = theta_field(&v, params)?;
        let next = solve_with_exponent(&theta, eps, problem, cfg, Some(&v), k, diagnostics)?.u;
        let delta = next.sup_distance(&v);
        diagnostics.outer.push(OuterRecord {
            epsilon: eps,
            iteration: k,
            delta,
        });
        if delta <= cfg.tol_fixed_point {
            diagnostics.fixed_point_converged = true;
            let (certificate, allowance) = certify(&next, params, problem, cfg, delta)?;
            if certificate > allowance {
                diagnostics.warnings.push(format!(
                    "fixed point at epsilon {eps:e}: self-consistency residual {certificate:.3e} exceeds allowance {allowance:.3e}"
                ));
            }
            return Ok(FixedPoint {
                u: next,
                epsilon: eps,
                outer_iterations: k,
                certificate,
                certificate_allowance: allowance,
            });
        }
        if delta >= previous_delta {
            rising += 1;
        } else {
            rising = 0;
        }
        previous_delta = delta;
        let values: Vec<f64> = if rising >= 2 {
            // Oscillation: restart from the average and relax harder.
            rising = 0;
            diagnostics.averaging_restarts += 1;
            damping = (damping * 0.5).max(1.0 / 64.0);
            v.values()
                .iter()
                .zip(next.values())
                .map(|(a, b)| 0.5 * (a + b))
                .collect()
        } else {
            v.values()
                .iter()
                .zip(next.values())
                .map(|(a, b)| a + damping * (b - a))
                .collect()
        };
        v = GridFunction::new(domain.clone(), values)?;
    }
    diagnostics.fixed_point_converged = false;
    let last = diagnostics.outer.last().map(|r| r.delta).unwrap_or(f64::NAN);
    Err(Error::NonConvergence {
        phase: "fixed point of T",
        iterations: cfg.max_outer_iters,
        last,
        diagnostics: Box::new(diagnostics.clone()),
    })
}

/// Residual of `u` against `θ_ε^u`, and the allowance `tol_inner + S·δ`
/// where `S` bounds the sensitivity of the residual to a sup-norm change of
/// the trial function (clamp slope `1/(2ε)`, mollifier of unit mass).
fn certify(
    u: &GridFunction,
    params: &DegeneracyParams,
    problem: &Problem,
    cfg: &SolveConfig,
    delta: f64,
) -> Result<(f64, f64)> {
    let eps = params.epsilon;
    let theta = theta_field(u, params)?;
    let certificate = residual_sup(u, &theta, eps, &problem.f, &problem.op, cfg.gradient)?;
    let spread = (params.theta2 - params.theta1) / (2.0 * eps);
    let mut sensitivity: f64 = 0.0;
    for &i in u.domain().interior() {
        let g = gradient_central(u, i)?;
        let base = eps + (g[0] * g[0] + g[1] * g[1]).sqrt();
        sensitivity = sensitivity.max(base.ln().abs() * (problem.f.value(i).abs() + cfg.tol_inner));
    }
    let allowance = cfg.tol_inner + cfg.tol_fixed_point.max(delta) * (1.0 + spread * sensitivity);
    Ok((certificate, allowance))
}

/// The regularization levels visited: the schedule values above `h`, then
/// `h` itself (when `h < 1`), capped at `max_steps` entries.
pub fn epsilon_levels(cfg: &SolveConfig, h: f64) -> Vec<f64> {
    let mut levels = Vec::new();
    let mut n = 1;
    while levels.len() < cfg.max_continuation_steps {
        let e = cfg.epsilon_schedule.value(n);
        if e <= h * (1.0 + 1e-12) {
            if h < 1.0 {
                levels.push(h);
            }
            break;
        }
        levels.push(e);
        n += 1;
    }
    levels
}

/// Drives ε down the schedule with warm starts until successive solutions
/// agree to `tol_continuation` or the floor `ε = h` is reached.
pub fn continuation(
    problem: &Problem,
    theta1: f64,
    theta2: f64,
    cfg: &SolveConfig,
) -> Result<ContinuationResult> {
    cfg.validate()?;
    let domain = problem.domain().clone();
    let levels = epsilon_levels(cfg, domain.h());
    if levels.is_empty() {
        return Err(Error::Resolution(format!(
            "grid spacing {} leaves no admissible regularization level",
            domain.h()
        )));
    }
    let mut diagnostics = SolveDiagnostics::default();
    let mut current: Option<GridFunction> = None;
    let mut last_delta = f64::INFINITY;
    let mut epsilon = levels[0];
    for &eps in &levels {
        let params = DegeneracyParams::new(theta1, theta2, eps)?;
        let fp = fixed_point_t_from(problem, &params, cfg, current.as_ref(), &mut diagnostics)?;
        let delta = current
            .as_ref()
            .map(|prev| prev.sup_distance(&fp.u))
            .unwrap_or(f64::INFINITY);
        diagnostics.continuation.push(ContinuationRecord {
            epsilon: eps,
            outer_iterations: fp.outer_iterations,
            delta,
            certificate: fp.certificate,
        });
        if cfg.keep_snapshots {
            diagnostics.snapshots.push((eps, fp.u.clone()));
        }
        epsilon = eps;
        last_delta = delta;
        current = Some(fp.u);
        if delta <= cfg.tol_continuation {
            break;
        }
    }
    diagnostics.cauchy = last_delta <= cfg.tol_continuation;
    if !diagnostics.cauchy {
        diagnostics.warnings.push(format!(
            "continuation stopped at epsilon {epsilon:e} without meeting the Cauchy tolerance (last change {last_delta:.3e})"
        ));
    }
    Ok(ContinuationResult {
        u: current.expect("at least one level"),
        epsilon,
        diagnostics,
    })
}
