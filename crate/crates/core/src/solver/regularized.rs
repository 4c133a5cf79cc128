use crate::degeneracy::{theta_field, DegeneracyParams, ExponentField};
use crate::error::{Error, Result};
use crate::grid::{gradient_central_raw, gradient_upwind_raw, Domain, GridFunction};
use crate::operators::EllipticOperator;

use super::banded::BandedMatrix;
use super::{GradientScheme, InnerMethod, InnerRecord, Problem, SolveConfig, SolveDiagnostics};

/// `|∇_h u|` at `node` under `scheme`; the upwind orientation follows the
/// sign of `f`. Partial derivatives with respect to nodal values are pushed
/// into `parts` when given.
pub(crate) fn prefactor_slope(
    domain: &Domain,
    u: &[f64],
    node: usize,
    scheme: GradientScheme,
    f: f64,
    parts: Option<&mut Vec<(usize, f64)>>,
) -> Option<f64> {
    let h = domain.h();
    match scheme {
        GradientScheme::Central => {
            let g = gradient_central_raw(domain, u, node)?;
            let slope = (g[0] * g[0] + g[1] * g[1]).sqrt();
            if let (Some(parts), true) = (parts, slope > 0.0) {
                for (k, gk) in g.iter().enumerate().take(domain.dim()) {
                    let mut e = [0, 0];
                    e[k] = 1;
                    let c = gk / (slope * 2.0 * h);
                    parts.push((domain.neighbor(node, e)?, c));
                    parts.push((domain.neighbor(node, [-e[0], -e[1]])?, -c));
                }
            }
            Some(slope)
        }
        GradientScheme::Upwind => {
            let rising = f > 0.0;
            let a = gradient_upwind_raw(domain, u, node, rising)?;
            let slope = (a[0] * a[0] + a[1] * a[1]).sqrt();
            if let (Some(parts), true) = (parts, slope > 0.0) {
                for (k, ak) in a.iter().enumerate().take(domain.dim()) {
                    if *ak <= 0.0 {
                        continue;
                    }
                    let mut e = [0, 0];
                    e[k] = 1;
                    let fwd = domain.neighbor(node, e)?;
                    let bwd = domain.neighbor(node, [-e[0], -e[1]])?;
                    let far = if rising {
                        if u[bwd] <= u[fwd] { bwd } else { fwd }
                    } else if u[fwd] >= u[bwd] {
                        fwd
                    } else {
                        bwd
                    };
                    let c = ak / (slope * h);
                    let sign = if rising { 1.0 } else { -1.0 };
                    parts.push((node, sign * c));
                    parts.push((far, -sign * c));
                }
            }
            Some(slope)
        }
    }
}

/// `(ε + |∇_h u|)^θ (ε u + F_h(u)) - f` at an interior node, with the
/// central-difference gradient.
pub fn residual_regularized(
    u: &GridFunction,
    theta: &ExponentField,
    epsilon: f64,
    f: &GridFunction,
    op: &EllipticOperator,
    node: usize,
) -> Result<f64> {
    residual_regularized_with(u, theta, epsilon, f, op, node, GradientScheme::Central)
}

/// [`residual_regularized`] with a selectable gradient discretization.
pub fn residual_regularized_with(
    u: &GridFunction,
    theta: &ExponentField,
    epsilon: f64,
    f: &GridFunction,
    op: &EllipticOperator,
    node: usize,
    scheme: GradientScheme,
) -> Result<f64> {
    let domain = u.domain();
    if !domain.is_interior(node) {
        return Err(Error::Stencil {
            node,
            direction: [1, 0],
        });
    }
    let slope = prefactor_slope(domain, u.values(), node, scheme, f.value(node), None).ok_or(
        Error::Stencil {
            node,
            direction: [1, 0],
        },
    )?;
    let curvature = op.apply_discrete(u, node)?;
    Ok((epsilon + slope).powf(theta.values()[node]) * (epsilon * u.value(node) + curvature) - f.value(node))
}

/// Largest `|residual|` over interior nodes, evaluated through the public
/// nodal routine (independent of the solver's loops).
pub fn residual_sup(
    u: &GridFunction,
    theta: &ExponentField,
    epsilon: f64,
    f: &GridFunction,
    op: &EllipticOperator,
    scheme: GradientScheme,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &i in u.domain().interior() {
        let r = residual_regularized_with(u, theta, epsilon, f, op, i, scheme)?;
        if !r.is_finite() {
            return Err(Error::NumericalFailure(format!("non-finite residual at node {i}")));
        }
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Output of one regularized solve.
#[derive(Debug, Clone)]
pub struct InnerSolve {
    pub u: GridFunction,
    pub residual: f64,
    pub iterations: usize,
}

/// Solves with the exponent field built from the trial function `v`.
pub fn solve_regularized(
    v: &GridFunction,
    epsilon: f64,
    problem: &Problem,
    params: &DegeneracyParams,
    cfg: &SolveConfig,
    initial: Option<&GridFunction>,
    diagnostics: &mut SolveDiagnostics,
) -> Result<InnerSolve> {
    let theta = theta_field(v, &params.with_epsilon(epsilon)?)?;
    solve_with_exponent(&theta, epsilon, problem, cfg, initial, 0, diagnostics)
}

struct Workspace<'a> {
    domain: &'a Domain,
    theta: &'a [f64],
    f: &'a [f64],
    op: &'a EllipticOperator,
    epsilon: f64,
    scheme: GradientScheme,
    /// Regularization inside the gradient prefactor; equals `epsilon` except
    /// on homotopy substeps.
    floor: f64,
    /// Position of each interior node among the unknowns.
    unknown: Vec<usize>,
    bandwidth: usize,
}

const NOT_UNKNOWN: usize = usize::MAX;

impl<'a> Workspace<'a> {
    fn new(
        domain: &'a Domain,
        theta: &'a [f64],
        f: &'a [f64],
        op: &'a EllipticOperator,
        epsilon: f64,
        scheme: GradientScheme,
    ) -> Result<Self> {
        let mut unknown = vec![NOT_UNKNOWN; domain.node_count()];
        for (k, &i) in domain.interior().iter().enumerate() {
            unknown[i] = k;
        }
        let mut ws = Workspace {
            domain,
            theta,
            f,
            op,
            epsilon,
            scheme,
            floor: epsilon,
            unknown,
            bandwidth: 0,
        };
        // Bandwidth from the actual stencil footprint.
        let zeros = vec![0.0; domain.node_count()];
        let mut parts = Vec::new();
        let mut bw = 0;
        for &i in domain.interior() {
            parts.clear();
            ws.linearized_row(&zeros, i, &mut parts)?;
            let row = ws.unknown[i];
            for &(j, _) in &parts {
                if ws.unknown[j] != NOT_UNKNOWN {
                    bw = bw.max(ws.unknown[j].abs_diff(row));
                }
            }
        }
        ws.bandwidth = bw;
        Ok(ws)
    }

    /// Residual `P (εu + F_h(u)) - f` at `node`, with `P = (floor + |∇_h u|)^θ`,
    /// and its partial derivatives into `parts`.
    fn linearized_row(&self, u: &[f64], node: usize, parts: &mut Vec<(usize, f64)>) -> Result<f64> {
        let domain = self.domain;
        let eps = self.epsilon;
        let theta = self.theta[node];
        let curvature = self.op.linearize(domain, u, node, Some(parts))?;
        parts.push((node, eps));
        let first = parts.len();
        let slope = prefactor_slope(domain, u, node, self.scheme, self.f[node], Some(parts)).ok_or(
            Error::Stencil {
                node,
                direction: [1, 0],
            },
        )?;
        let base = self.floor + slope;
        let p = base.powf(theta);
        let inner = eps * u[node] + curvature;
        // dP/d(slope) = θP/base.
        let scale = theta * p * inner / base;
        for part in &mut parts[first..] {
            part.1 *= scale;
        }
        for part in &mut parts[..first] {
            part.1 *= p;
        }
        Ok(p * inner - self.f[node])
    }

    /// Fills `out` with nodal residuals and returns their sup.
    fn residuals(&self, u: &[f64], out: &mut [f64]) -> Result<f64> {
        let domain = self.domain;
        let mut worst: f64 = 0.0;
        for (k, &i) in domain.interior().iter().enumerate() {
            let slope = prefactor_slope(domain, u, i, self.scheme, self.f[i], None).ok_or(Error::Stencil {
                node: i,
                direction: [1, 0],
            })?;
            let p = (self.floor + slope).powf(self.theta[i]);
            let curvature = self.op.discrete_raw(domain, u, i)?;
            let r = p * (self.epsilon * u[i] + curvature) - self.f[i];
            if !r.is_finite() {
                return Err(Error::NumericalFailure(format!("non-finite residual at node {i}")));
            }
            out[k] = r;
            worst = worst.max(r.abs());
        }
        Ok(worst)
    }

    /// Newton direction for `(J + diag|J|/Δt) δ = -R`.
    fn newton_direction(&self, u: &[f64], residual: &[f64], inv_dt: f64) -> Option<Vec<f64>> {
        let n = self.domain.interior().len();
        let mut jac = BandedMatrix::new(n, self.bandwidth, self.bandwidth);
        let mut parts = Vec::with_capacity(32);
        for (row, &i) in self.domain.interior().iter().enumerate() {
            parts.clear();
            self.linearized_row(u, i, &mut parts).ok()?;
            let mut diag = 0.0;
            for &(j, c) in &parts {
                let col = self.unknown[j];
                if col != NOT_UNKNOWN {
                    jac.add(row, col, c);
                    if col == row {
                        diag += c;
                    }
                }
            }
            if inv_dt > 0.0 {
                jac.add(row, row, diag.abs().max(1e-300) * inv_dt);
            }
        }
        let mut rhs: Vec<f64> = residual.iter().map(|r| -r).collect();
        jac.solve(&mut rhs)?;
        Some(rhs)
    }

    /// Solves the scalar nodal equation for the center value with neighbors
    /// frozen. The nodal map is strictly increasing in the center value.
    fn nodal_solve(&self, u: &mut [f64], node: usize) -> Result<f64> {
        let domain = self.domain;
        let eps = self.epsilon;
        let f = self.f[node];
        let theta = self.theta[node];
        let original = u[node];
        let phi = |c: f64, u: &mut [f64]| -> Result<f64> {
            u[node] = c;
            let slope = prefactor_slope(domain, u, node, self.scheme, f, None).ok_or(Error::Stencil {
                node,
                direction: [1, 0],
            })?;
            let target = f / (self.floor + slope).powf(theta);
            if !target.is_finite() {
                return Err(Error::NumericalFailure(format!("nodal target overflow at node {node}")));
            }
            Ok(eps * c + self.op.discrete_raw(domain, u, node)? - target)
        };
        let mut step = original.abs().max(1.0);
        let (mut lo, mut hi) = (original - step, original + step);
        let mut flo = phi(lo, u)?;
        let mut fhi = phi(hi, u)?;
        let mut guard = 0;
        while flo > 0.0 || fhi < 0.0 {
            step *= 2.0;
            if flo > 0.0 {
                hi = lo;
                fhi = flo;
                lo -= step;
                flo = phi(lo, u)?;
            } else {
                lo = hi;
                flo = fhi;
                hi += step;
                fhi = phi(hi, u)?;
            }
            guard += 1;
            if guard > 200 || !lo.is_finite() || !hi.is_finite() {
                u[node] = original;
                return Err(Error::NumericalFailure(format!("no bracket at node {node}")));
            }
        }
        // Regula falsi (Illinois) safeguarded by bisection.
        let mut side = 0i8;
        let mut root = 0.5 * (lo + hi);
        for _ in 0..200 {
            let secant = if fhi != flo {
                (lo * fhi - hi * flo) / (fhi - flo)
            } else {
                0.5 * (lo + hi)
            };
            let width = hi - lo;
            let candidate = if secant > lo + 1e-3 * width && secant < hi - 1e-3 * width {
                secant
            } else {
                0.5 * (lo + hi)
            };
            root = candidate;
            let fc = phi(candidate, u)?;
            if fc == 0.0 || width <= 4.0 * f64::EPSILON * candidate.abs().max(1e-300) {
                break;
            }
            if fc < 0.0 {
                lo = candidate;
                flo = fc;
                if side == -1 {
                    fhi *= 0.5;
                }
                side = -1;
            } else {
                hi = candidate;
                fhi = fc;
                if side == 1 {
                    flo *= 0.5;
                }
                side = 1;
            }
        }
        u[node] = original;
        Ok(root)
    }

    fn sweep(&self, u: &mut [f64], damping: f64) -> Result<()> {
        for &i in self.domain.interior() {
            let root = self.nodal_solve(u, i)?;
            u[i] += damping * (root - u[i]);
        }
        Ok(())
    }
}

/// Runs at most `budget` iterations on `u` (boundary values already set).
/// Returns whether the residual reached `cfg.tol_inner`; `iterations` and
/// `last` accumulate across calls.
#[allow(clippy::too_many_arguments)]
fn iterate(
    ws: &Workspace<'_>,
    u: &mut Vec<f64>,
    cfg: &SolveConfig,
    budget: usize,
    iterations: &mut usize,
    last: &mut f64,
    outer: usize,
    diagnostics: &mut SolveDiagnostics,
) -> Result<bool> {
    let domain = ws.domain;
    let n = domain.interior().len();
    let mut res = vec![0.0; n];
    let l2 = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut sup = ws.residuals(u, &mut res)?;
    let mut norm = l2(&res);
    *last = sup;
    // Damped Newton with a pseudo-time shift; the shift grows on failed
    // line searches and decays on full steps.
    let mut inv_dt = 1.0 / cfg.pseudo_time_step;
    let mut trial = u.clone();
    let mut trial_res = vec![0.0; n];
    let mut rejections = 0;
    let mut used = 0;
    while sup > cfg.tol_inner {
        if used >= budget {
            return Ok(false);
        }
        used += 1;
        *iterations += 1;
        let mut progressed = false;
        if cfg.method == InnerMethod::Newton && rejections < 40 {
            if let Some(dir) = ws.newton_direction(u, &res, inv_dt) {
                let mut step = 1.0;
                for _ in 0..12 {
                    for (k, &i) in domain.interior().iter().enumerate() {
                        trial[i] = u[i] + step * dir[k];
                    }
                    if let Ok(s) = ws.residuals(&trial, &mut trial_res) {
                        let m = l2(&trial_res);
                        if m <= (1.0 - 1e-4 * step) * norm || (step == 1.0 && m <= 4.0 * norm) {
                            if step == 1.0 {
                                inv_dt *= 0.25;
                                if inv_dt < 1e-12 {
                                    inv_dt = 0.0;
                                }
                            }
                            std::mem::swap(u, &mut trial);
                            std::mem::swap(&mut res, &mut trial_res);
                            sup = s;
                            norm = m;
                            progressed = true;
                            if step < 1.0 {
                                // Short steps come from switching one-sided
                                // branches; a sweep settles them locally.
                                ws.sweep(u, cfg.damping)?;
                                sup = ws.residuals(u, &mut res)?;
                                norm = l2(&res);
                                trial.copy_from_slice(u);
                            }
                            break;
                        }
                    }
                    step *= 0.5;
                }
            }
            if !progressed {
                rejections += 1;
                inv_dt = if inv_dt == 0.0 { 1e-2 } else { inv_dt * 8.0 };
                trial.copy_from_slice(u);
                used -= 1;
                *iterations -= 1;
                continue;
            }
        }
        if !progressed {
            ws.sweep(u, cfg.damping)?;
            sup = ws.residuals(u, &mut res)?;
            norm = l2(&res);
            trial.copy_from_slice(u);
        }
        *last = sup;
        diagnostics.inner.push(InnerRecord {
            epsilon: ws.epsilon,
            outer,
            iteration: *iterations,
            residual: sup,
        });
    }
    Ok(true)
}

/// Solves the regularized equation with a frozen exponent field.
///
/// Boundary nodes carry `g` exactly; interior nodes are solved until the
/// residual sup-norm is at most `cfg.tol_inner`. The returned residual is
/// recomputed through [`residual_sup`].
pub fn solve_with_exponent(
    theta: &ExponentField,
    epsilon: f64,
    problem: &Problem,
    cfg: &SolveConfig,
    initial: Option<&GridFunction>,
    outer: usize,
    diagnostics: &mut SolveDiagnostics,
) -> Result<InnerSolve> {
    cfg.validate()?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::config("epsilon", "must lie in (0, 1)"));
    }
    let domain = problem.domain().clone();
    let mut u: Vec<f64> = match initial {
        Some(init) => init.values().to_vec(),
        None => vec![0.0; domain.node_count()],
    };
    for &b in domain.boundary() {
        u[b] = problem.g.value(b);
    }
    let mut ws = Workspace::new(&domain, theta.values(), problem.f.values(), &problem.op, epsilon, cfg.gradient)?;
    let mut iterations = 0;
    let mut last = f64::INFINITY;
    let direct_budget = if cfg.method == InnerMethod::Newton {
        (cfg.max_inner_iters / 4).max(1)
    } else {
        cfg.max_inner_iters
    };
    let start = u.clone();
    let mut converged = iterate(&ws, &mut u, cfg, direct_budget, &mut iterations, &mut last, outer, diagnostics)?;
    if !converged && cfg.method == InnerMethod::Newton && iterations < cfg.max_inner_iters {
        // Homotopy in the prefactor regularization: a larger floor tames the
        // source f/P where the gradient is small.
        u = start;
        let mut floors = Vec::new();
        let mut level = epsilon;
        while level < 0.5 {
            level *= 2.0;
            floors.push(level);
        }
        floors.reverse();
        floors.push(epsilon);
        for floor in floors {
            ws.floor = floor;
            let budget = cfg.max_inner_iters - iterations;
            converged = iterate(&ws, &mut u, cfg, budget, &mut iterations, &mut last, outer, diagnostics)?;
            if !converged {
                break;
            }
        }
    }
    if !converged {
        diagnostics.inner_converged = false;
        return Err(Error::NonConvergence {
            phase: "regularized solve",
            iterations,
            last,
            diagnostics: Box::new(diagnostics.clone()),
        });
    }
    diagnostics.inner_converged = true;
    let u = GridFunction::new(domain.clone(), u)?;
    let certificate = residual_sup(&u, theta, epsilon, &problem.f, &problem.op, cfg.gradient)?;
    if certificate > cfg.tol_inner * (1.0 + 1e-6) {
        return Err(Error::NumericalFailure(format!(
            "residual certificate {certificate:.3e} exceeds tolerance {:.3e}",
            cfg.tol_inner
        )));
    }
    Ok(InnerSolve {
        u,
        residual: certificate,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Domain, DomainSpec};
    use crate::operators::OperatorKind;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn line(h: f64) -> Arc<Domain> {
        Domain::build(DomainSpec::interval(1.0, h)).unwrap()
    }

    #[test]
    fn residual_examples() {
        let d = line(0.25);
        let op = EllipticOperator::negative_trace(1);
        let theta = ExponentField::constant(d.clone(), 1.0);
        let zero = GridFunction::zeros(d.clone());
        for &i in d.interior() {
            assert_eq!(residual_regularized(&zero, &theta, 0.1, &zero, &op, i).unwrap(), 0.0);
        }
        // u ≡ c: residual ε^{1+θ}c - f.
        let c = GridFunction::constant(d.clone(), 0.7);
        let theta1 = ExponentField::constant(d.clone(), 1.0);
        for &i in d.interior() {
            let r = residual_regularized(&c, &theta1, 0.1, &zero, &op, i).unwrap();
            assert_relative_eq!(r, 0.1f64.powi(2) * 0.7, epsilon = 1e-15);
        }
        // Hand evaluation: u = x²/2 at x = 0.5, θ = 1, ε = 0.1 gives
        // (0.1 + 0.5)(0.1·0.125 - 1) = -0.5925.
        let q = GridFunction::from_fn(d.clone(), |x| 0.5 * x[0] * x[0]).unwrap();
        let at = d.nearest_node(&[0.5]).unwrap();
        let r = residual_regularized(&q, &theta1, 0.1, &zero, &op, at).unwrap();
        assert_relative_eq!(r, -0.5925, epsilon = 1e-14);
        let f = GridFunction::constant(d.clone(), 0.25);
        let r = residual_regularized(&q, &theta1, 0.1, &f, &op, at).unwrap();
        assert_relative_eq!(r, -0.8425, epsilon = 1e-14);
    }

    #[test]
    fn zero_data_gives_zero() {
        let d = Domain::build(DomainSpec::ball(2, 1.0, 0.125)).unwrap();
        let op = EllipticOperator::new(OperatorKind::PucciMinus, 1.0, 2.0, 2).unwrap();
        let p = Problem::new(GridFunction::zeros(d.clone()), GridFunction::zeros(d.clone()), op).unwrap();
        let theta = ExponentField::constant(d.clone(), 2.0);
        let mut diag = SolveDiagnostics::default();
        let s = solve_with_exponent(&theta, 0.1, &p, &SolveConfig::default(), None, 0, &mut diag).unwrap();
        assert!(s.u.values().iter().all(|&v| v == 0.0));
        assert_eq!(s.residual, 0.0);
    }

    #[test]
    fn gauss_seidel_and_newton_agree() {
        let d = line(1.0 / 16.0);
        let op = EllipticOperator::new(OperatorKind::PucciPlus, 0.5, 1.5, 1).unwrap();
        let f = GridFunction::from_fn(d.clone(), |x| (3.0 * x[0]).sin()).unwrap();
        let g = GridFunction::from_fn(d.clone(), |x| x[0]).unwrap();
        let p = Problem::new(f, g, op).unwrap();
        let theta = ExponentField::constant(d.clone(), 1.5);
        let mut diag = SolveDiagnostics::default();
        let newton = solve_with_exponent(&theta, 0.2, &p, &SolveConfig::default(), None, 0, &mut diag).unwrap();
        let gs_cfg = SolveConfig {
            method: InnerMethod::GaussSeidel,
            max_inner_iters: 20_000,
            tol_inner: 1e-10,
            ..SolveConfig::default()
        };
        let gs = solve_with_exponent(&theta, 0.2, &p, &gs_cfg, None, 0, &mut diag).unwrap();
        assert!(newton.iterations < 40, "newton took {}", newton.iterations);
        assert!(newton.u.sup_distance(&gs.u) < 1e-8);
        for &b in d.boundary() {
            assert_eq!(newton.u.value(b).to_bits(), p.g.value(b).to_bits());
        }
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let d = line(1.0 / 32.0);
        let op = EllipticOperator::negative_trace(1);
        let p = Problem::new(
            GridFunction::constant(d.clone(), -1.0),
            GridFunction::constant(d.clone(), 1.0),
            op,
        )
        .unwrap();
        let theta = ExponentField::constant(d.clone(), 1.0);
        let cfg = SolveConfig {
            max_inner_iters: 1,
            method: InnerMethod::GaussSeidel,
            ..SolveConfig::default()
        };
        let mut diag = SolveDiagnostics::default();
        let err = solve_with_exponent(&theta, 0.1, &p, &cfg, None, 0, &mut diag).unwrap_err();
        match err {
            Error::NonConvergence { diagnostics, .. } => assert_eq!(diagnostics.inner.len(), 1),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn linearization_matches_finite_differences() {
        let d = line(1.0 / 32.0);
        let op = EllipticOperator::negative_trace(1);
        let f: Vec<f64> = d.nodes().iter().map(|n: &crate::grid::Node| if n.x[0] < 0.0 { 0.6 } else { -1.1 }).collect();
        let theta: Vec<f64> = d.nodes().iter().map(|n: &crate::grid::Node| 2.0 + (3.0 * n.x[0]).sin()).collect();
        let u: Vec<f64> = d.nodes().iter().map(|n: &crate::grid::Node| (5.0 * n.x[0]).sin() * 0.3 + n.x[0] * n.x[0]).collect();
        for scheme in [GradientScheme::Central, GradientScheme::Upwind] {
            let mut ws = Workspace::new(&d, &theta, &f, &op, 0.05, scheme).unwrap();
            ws.floor = 0.1;
            let mut parts = Vec::new();
            for &i in d.interior() {
                parts.clear();
                ws.linearized_row(&u, i, &mut parts).unwrap();
                for j in 0..d.node_count() {
                    let analytic: f64 = parts.iter().filter(|p| p.0 == j).map(|p| p.1).sum();
                    let dh = 1e-6;
                    let mut scratch = Vec::new();
                    let mut v = u.clone();
                    v[j] += dh;
                    let g1 = ws.linearized_row(&v, i, &mut scratch).unwrap();
                    v[j] -= 2.0 * dh;
                    let g2 = ws.linearized_row(&v, i, &mut scratch).unwrap();
                    let fd = (g1 - g2) / (2.0 * dh);
                    assert!(
                        (fd - analytic).abs() <= 1e-4 * (1.0 + fd.abs()),
                        "{scheme:?} node {i} wrt {j}: fd {fd} analytic {analytic}"
                    );
                }
            }
        }
    }
}
