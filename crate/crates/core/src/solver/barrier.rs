//! Explicit global barriers: a downward paraboloid anchored outside the
//! domain, and inverse-power radial profiles centered on exterior spheres
//! touching each boundary node.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::degeneracy::ExponentField;
use crate::error::{Error, Result};
use crate::grid::{norm, Domain, GridFunction, Shape};
use crate::operators::EllipticOperator;

use super::regularized::residual_regularized_with;
use super::GradientScheme;

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierOptions {
    /// Number of η levels `1/2, 1/4, ..., 2^{-k}`.
    pub eta_levels: usize,
    /// Overrides the domain's exterior sphere radius.
    pub exterior_radius: Option<f64>,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            eta_levels: 6,
            exterior_radius: None,
        }
    }
}

/// Constants of the barrier construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSpec {
    pub x0: [f64; 2],
    /// `‖f‖_∞` over interior nodes.
    pub k: f64,
    pub k1: f64,
    pub k2: f64,
    /// `‖g‖_∞` over boundary nodes.
    pub g_sup: f64,
    pub r: f64,
    /// Largest exterior-center offset actually used (at least `r`).
    pub r_effective: f64,
    pub r1: f64,
    pub alpha_b: f64,
    pub m_b: f64,
    pub eta_levels: Vec<f64>,
    pub c_eta: Vec<f64>,
    /// Boundary nodes whose profile could not be used at some η level.
    pub skipped: usize,
}

impl BarrierSpec {
    /// Plain `key=value` lines.
    pub fn to_manifest(&self) -> String {
        let f = crate::io::fmt17;
        let mut out = String::new();
        let _ = writeln!(out, "x0={},{}", f(self.x0[0]), f(self.x0[1]));
        for (key, v) in [
            ("K", self.k),
            ("K1", self.k1),
            ("K2", self.k2),
            ("g_sup", self.g_sup),
            ("R", self.r),
            ("R_effective", self.r_effective),
            ("R1", self.r1),
            ("alpha_b", self.alpha_b),
            ("M_b", self.m_b),
        ] {
            let _ = writeln!(out, "{key}={}", f(v));
        }
        let join = |v: &[f64]| v.iter().map(|&x| f(x)).collect::<Vec<_>>().join(",");
        let _ = writeln!(out, "eta_levels={}", join(&self.eta_levels));
        let _ = writeln!(out, "C_eta={}", join(&self.c_eta));
        let _ = writeln!(out, "skipped={}", self.skipped);
        out
    }

    fn validate(&self, lambda: f64, cap: f64, dim: usize) -> Result<()> {
        let d = dim as f64;
        if lambda * (self.alpha_b + 2.0) - d * cap < 1.0 - 1e-12 || self.alpha_b <= 2.0 {
            return Err(Error::config(
                "barrier.alpha_b",
                "violates lambda*(alpha_b+2) - d*Lambda >= 1 with alpha_b > 2",
            ));
        }
        let slope = self.m_b * self.alpha_b / self.r1.powf(1.0 + self.alpha_b);
        if slope < 1.0 * (1.0 - 1e-12) {
            return Err(Error::config("barrier.M_b", "violates M_b*alpha_b/R1^(1+alpha_b) >= 1"));
        }
        let curvature = self.m_b * self.alpha_b / self.r1.powf(2.0 + self.alpha_b);
        if curvature < (self.k + self.g_sup) * (1.0 - 1e-12) {
            return Err(Error::config(
                "barrier.M_b",
                "violates M_b*alpha_b/R1^(2+alpha_b) >= K + sup|g|",
            ));
        }
        if ![self.k1, self.k2, self.m_b, self.r1].iter().all(|v| v.is_finite()) {
            return Err(Error::config("barrier", "non-finite barrier constant"));
        }
        Ok(())
    }
}

/// Smallest admissible barrier exponent: `λ(α+2) - dΛ >= 1`, and at least 3.
pub fn barrier_exponent(lambda: f64, cap: f64, dim: usize) -> f64 {
    ((1.0 + dim as f64 * cap) / lambda - 2.0).max(3.0)
}

/// `max(R1^{1+α}/α, (K + sup|g|) R1^{2+α}/α)`.
pub fn barrier_scale(r1: f64, alpha: f64, k_plus_g: f64) -> f64 {
    (r1.powf(1.0 + alpha) / alpha).max(k_plus_g * r1.powf(2.0 + alpha) / alpha)
}

fn outward_normal(domain: &Domain, y: &[f64]) -> [f64; 2] {
    let dim = domain.dim();
    let mut n = [0.0; 2];
    match domain.spec().shape {
        Shape::Ball => n[..dim].copy_from_slice(y),
        Shape::Box | Shape::Interval => {
            let top = y.iter().map(|c| c.abs()).fold(0.0, f64::max);
            for k in 0..dim {
                if y[k].abs() >= top - 1e-9 * top.max(1.0) {
                    n[k] = y[k].signum();
                }
            }
        }
    }
    let len = norm(&n[..dim]);
    if len > 0.0 {
        n[0] /= len;
        n[1] /= len;
    } else {
        n[0] = 1.0;
    }
    n
}

/// Exterior center `y + t n` with the least `t >= r` keeping every node at
/// distance at least `r`.
fn exterior_center(domain: &Domain, y: &[f64], n: [f64; 2], r: f64) -> ([f64; 2], f64) {
    let dim = domain.dim();
    let mut t = r;
    for node in 0..domain.node_count() {
        let x = domain.coords(node);
        let mut an = 0.0;
        let mut aa = 0.0;
        for k in 0..dim {
            let a = x[k] - y[k];
            an += a * n[k];
            aa += a * a;
        }
        let disc = an * an - aa + r * r;
        if disc > 0.0 {
            t = t.max(an + disc.sqrt());
        }
    }
    let mut c = [0.0; 2];
    for k in 0..dim {
        c[k] = y[k] + t * n[k];
    }
    (c, t)
}

struct Profile {
    g: f64,
    center: [f64; 2],
}

fn dist(domain: &Domain, x: &[f64], c: &[f64; 2]) -> f64 {
    let mut s = 0.0;
    for k in 0..domain.dim() {
        s += (x[k] - c[k]).powi(2);
    }
    s.sqrt()
}

/// Global supersolution `w̄ = min(w₁, min_{y,η} w_{y,η})` for boundary data
/// `g` (boundary values) and right-hand side `f` (interior values).
pub fn build_barrier_super(
    g: &GridFunction,
    f: &GridFunction,
    op: &EllipticOperator,
    options: &BarrierOptions,
) -> Result<(GridFunction, BarrierSpec)> {
    let domain = g.domain().clone();
    if !std::sync::Arc::ptr_eq(&domain, f.domain()) {
        return Err(Error::ShapeMismatch("f and g live on different domains".into()));
    }
    if options.eta_levels == 0 {
        return Err(Error::config("barrier.eta_levels", "need at least one level"));
    }
    let dim = domain.dim();
    let d = dim as f64;
    let r = options.exterior_radius.unwrap_or(domain.spec().exterior_radius);
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::config("domain.R", "exterior sphere radius must be positive"));
    }
    let (lambda, cap) = (op.lambda, op.cap);
    let k = domain.interior().iter().fold(0.0, |m: f64, &i| m.max(f.value(i).abs()));
    let g_sup = g.boundary_sup_norm();

    let rho = domain.max_radius();
    let x0 = [rho + 1.0, 0.0];
    let k1 = k.max(lambda * d);
    let c = k1 / lambda;
    let far = (0..domain.node_count())
        .map(|i| dist(&domain, domain.coords(i), &x0))
        .fold(0.0, f64::max);
    let k2 = g_sup + 0.5 * c * far * far + 1.0;

    let mut profiles = Vec::with_capacity(domain.boundary().len());
    let mut r_effective = r;
    for &y in domain.boundary() {
        let yc = domain.coords(y);
        let n = outward_normal(&domain, yc);
        let (center, t) = exterior_center(&domain, yc, n, r);
        r_effective = r_effective.max(t);
        profiles.push(Profile {
            g: g.value(y),
            center,
        });
    }
    let r1 = r_effective + domain.diameter_bound();
    let alpha_b = barrier_exponent(lambda, cap, dim);
    let m_b = barrier_scale(r1, alpha_b, k + g_sup);
    // Nonnegative on every node by the choice of centers; the clamp only
    // removes round-off at nodes lying on an exterior sphere.
    let radial =
        |x: &[f64], p: &Profile| (m_b * (r.powf(-alpha_b) - dist(&domain, x, &p.center).powf(-alpha_b))).max(0.0);
    // Profile values this small are round-off of an exact zero.
    let radial_floor = 1e-9 * m_b * r.powf(-alpha_b);

    // C_η: the least multiplier ≥ 1 making every w_{y,η} dominate g on the
    // boundary. Pairs with an unavoidable zero of w_y are dropped.
    let eta_levels: Vec<f64> = (1..=options.eta_levels).map(|j| 0.5f64.powi(j as i32)).collect();
    let boundary = domain.boundary();
    let mut c_eta = Vec::with_capacity(eta_levels.len());
    let mut usable = vec![vec![true; profiles.len()]; eta_levels.len()];
    let mut skipped = 0;
    for (li, &eta) in eta_levels.iter().enumerate() {
        let mut need: f64 = 1.0;
        for (pi, p) in profiles.iter().enumerate() {
            let mut local: f64 = 1.0;
            for &x in boundary {
                let excess = g.value(x) - p.g - eta;
                if excess <= 0.0 {
                    continue;
                }
                let w = radial(domain.coords(x), p);
                if w <= radial_floor {
                    local = f64::INFINITY;
                    break;
                }
                local = local.max(excess / w);
            }
            if local.is_finite() {
                need = need.max(local);
            } else {
                usable[li][pi] = false;
                skipped += 1;
            }
        }
        c_eta.push(need);
    }

    let spec = BarrierSpec {
        x0,
        k,
        k1,
        k2,
        g_sup,
        r,
        r_effective,
        r1,
        alpha_b,
        m_b,
        eta_levels: eta_levels.clone(),
        c_eta: c_eta.clone(),
        skipped,
    };
    spec.validate(lambda, cap, dim)?;

    let values: Vec<f64> = (0..domain.node_count())
        .into_par_iter()
        .map(|i| {
            let x = domain.coords(i);
            let dx = dist(&domain, x, &x0);
            let mut w = k2 - 0.5 * c * dx * dx;
            for (li, &eta) in eta_levels.iter().enumerate() {
                for (pi, p) in profiles.iter().enumerate() {
                    if usable[li][pi] {
                        w = w.min(p.g + eta + c_eta[li] * radial(x, p));
                    }
                }
            }
            w
        })
        .collect();
    let w = GridFunction::new(domain.clone(), values)?;
    for &b in boundary {
        if w.value(b) < g.value(b) - 1e-12 * (1.0 + g_sup) {
            return Err(Error::config(
                "barrier",
                format!("supersolution falls below g at boundary node {b}"),
            ));
        }
    }
    Ok((w, spec))
}

/// Global subsolution, the mirror image `-w̄(-g, -f)`.
pub fn build_barrier_sub(
    g: &GridFunction,
    f: &GridFunction,
    op: &EllipticOperator,
    options: &BarrierOptions,
) -> Result<(GridFunction, BarrierSpec)> {
    let (w, spec) = build_barrier_super(&g.map(|v| -v)?, &f.map(|v| -v)?, op, options)?;
    Ok((w.map(|v| -v)?, spec))
}

/// Nodewise outcome of a discrete barrier check.
#[derive(Debug, Clone, Default)]
pub struct BarrierCheck {
    pub checked: usize,
    /// `(node, signed margin)` for every node whose margin is below `-tol`.
    pub violations: Vec<(usize, f64)>,
    /// Smallest signed margin; positive means strict.
    pub worst_margin: f64,
}

impl BarrierCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[allow(clippy::too_many_arguments)]
fn check(
    w: &GridFunction,
    epsilon: f64,
    theta: &ExponentField,
    f: &GridFunction,
    op: &EllipticOperator,
    tol: f64,
    scheme: GradientScheme,
    sign: f64,
) -> Result<BarrierCheck> {
    let domain = w.domain();
    let margins: Vec<(usize, f64)> = domain
        .interior()
        .par_iter()
        .map(|&i| residual_regularized_with(w, theta, epsilon, f, op, i, scheme).map(|r| (i, sign * r)))
        .collect::<Result<_>>()?;
    let mut report = BarrierCheck {
        checked: margins.len(),
        violations: Vec::new(),
        worst_margin: f64::INFINITY,
    };
    for (i, m) in margins {
        report.worst_margin = report.worst_margin.min(m);
        if !(m >= -tol) {
            report.violations.push((i, m));
        }
    }
    Ok(report)
}

/// Checks that the regularized residual of `w` is `>= -tol` at every interior node.
pub fn check_discrete_supersolution(
    w: &GridFunction,
    epsilon: f64,
    theta: &ExponentField,
    f: &GridFunction,
    op: &EllipticOperator,
    tol: f64,
    scheme: GradientScheme,
) -> Result<BarrierCheck> {
    check(w, epsilon, theta, f, op, tol, scheme, 1.0)
}

/// Checks that the regularized residual of `w` is `<= tol` at every interior node.
pub fn check_discrete_subsolution(
    w: &GridFunction,
    epsilon: f64,
    theta: &ExponentField,
    f: &GridFunction,
    op: &EllipticOperator,
    tol: f64,
    scheme: GradientScheme,
) -> Result<BarrierCheck> {
    check(w, epsilon, theta, f, op, tol, scheme, -1.0)
}
