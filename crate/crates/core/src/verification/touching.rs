//! Discrete viscosity inequalities tested with random quadratics: at every
//! strict discrete extremum of `u - φ` the exact derivatives of `φ` must
//! satisfy the extremal inequality up to a consistency slack.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{gradient_central, Direction, Domain, GridFunction};
use crate::io::fmt17;
use crate::operators::{EllipticOperator, OperatorKind, SymMat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TouchingTestConfig {
    pub sample_count: usize,
    pub seed: u64,
    pub gradient_range: f64,
    pub hessian_range: f64,
    /// Slack in the inequality; `None` means `h^{1/2}`.
    pub tol_touch: Option<f64>,
}

impl Default for TouchingTestConfig {
    fn default() -> Self {
        TouchingTestConfig {
            sample_count: 500,
            seed: 0,
            gradient_range: 2.0,
            hessian_range: 4.0,
            tol_touch: None,
        }
    }
}

impl TouchingTestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::config("verification.sample_count", "must be positive"));
        }
        if !(self.gradient_range > 0.0 && self.gradient_range.is_finite()) {
            return Err(Error::config("verification.gradient_range", "must be positive"));
        }
        if !(self.hessian_range > 0.0 && self.hessian_range.is_finite()) {
            return Err(Error::config("verification.hessian_range", "must be positive"));
        }
        if let Some(t) = self.tol_touch {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::config("verification.tol_touch", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn tolerance(&self, h: f64) -> f64 {
        self.tol_touch.unwrap_or_else(|| h.sqrt())
    }
}

/// `φ(x) = p·(x-c) + ½(x-c)ᵀM(x-c)`; the offset never affects extrema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub center: [f64; 2],
    pub p: [f64; 2],
    pub m: SymMat,
}

impl Quadratic {
    pub fn value(&self, x: &[f64]) -> f64 {
        let d = self.offset(x);
        let md = self.m.apply(&d[..self.m.dim]);
        let mut v = 0.0;
        for k in 0..self.m.dim {
            v += self.p[k] * d[k] + 0.5 * d[k] * md[k];
        }
        v
    }

    pub fn gradient(&self, x: &[f64]) -> [f64; 2] {
        let d = self.offset(x);
        let md = self.m.apply(&d[..self.m.dim]);
        let mut g = [0.0; 2];
        for k in 0..self.m.dim {
            g[k] = self.p[k] + md[k];
        }
        g
    }

    fn offset(&self, x: &[f64]) -> [f64; 2] {
        let mut d = [0.0; 2];
        for k in 0..self.m.dim {
            d[k] = x[k] - self.center[k];
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TouchSide {
    /// Maxima of `u - φ`; `min{|Dφ|^θ F, F} <= C₀ + tol`.
    Sub,
    /// Minima of `u - φ`; `max{|Dφ|^θ F, F} >= -C₀ - tol`.
    Super,
}

impl TouchSide {
    pub fn name(self) -> &'static str {
        match self {
            TouchSide::Sub => "subsolution",
            TouchSide::Super => "supersolution",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TouchRecord {
    pub sample: usize,
    pub quadratic: Quadratic,
    pub node: usize,
    pub x: [f64; 2],
    pub slope: f64,
    pub curvature: f64,
    /// The extremal expression evaluated at the touching node.
    pub value: f64,
    /// Distance to the bound, positive when the inequality holds.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TouchingTestReport {
    pub side: TouchSide,
    pub c0: f64,
    pub theta: f64,
    pub tol: f64,
    pub samples: usize,
    pub records: Vec<TouchRecord>,
}

impl TouchingTestReport {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.passed).count()
    }

    /// Fraction of passing evaluations; 1 when nothing touched.
    pub fn pass_rate(&self) -> f64 {
        if self.records.is_empty() {
            1.0
        } else {
            1.0 - self.failures() as f64 / self.records.len() as f64
        }
    }

    pub fn worst_margin(&self) -> f64 {
        self.records.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    pub fn witnesses(&self) -> impl Iterator<Item = &TouchRecord> {
        self.records.iter().filter(|r| !r.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("side,sample,node,x1,x2,p1,p2,m11,m12,m22,slope,curvature,value,margin,passed\n");
        for r in &self.records {
            let q = &r.quadratic;
            let fields = [
                r.x[0], r.x[1], q.p[0], q.p[1], q.m.a11, q.m.a12, q.m.a22, r.slope, r.curvature, r.value,
                r.margin,
            ];
            let nums: Vec<String> = fields.iter().map(|v| fmt17(*v)).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.side.name(),
                r.sample,
                r.node,
                nums.join(","),
                r.passed
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "{} touching test: {} samples, {} evaluations, {} failures, pass rate {:.6}, worst margin {}, tol {}",
            self.side.name(),
            self.samples,
            self.records.len(),
            self.failures(),
            self.pass_rate(),
            fmt17(self.worst_margin()),
            fmt17(self.tol),
        )
    }
}

pub fn touch_test_subsolution(
    u: &GridFunction,
    c0: f64,
    theta2: f64,
    op: &EllipticOperator,
    cfg: &TouchingTestConfig,
) -> Result<TouchingTestReport> {
    touch_test(u, c0, theta2, op, cfg, TouchSide::Sub)
}

pub fn touch_test_supersolution(
    u: &GridFunction,
    c0: f64,
    theta2: f64,
    op: &EllipticOperator,
    cfg: &TouchingTestConfig,
) -> Result<TouchingTestReport> {
    touch_test(u, c0, theta2, op, cfg, TouchSide::Super)
}

/// Lattice directions compared against when deciding strictness: the
/// operator's stencil plus the axes, both orientations.
fn comparison_directions(op: &EllipticOperator, dim: usize) -> Vec<Direction> {
    let mut set = BTreeSet::new();
    let axes: Vec<Direction> = if dim == 1 { vec![[1, 0]] } else { vec![[1, 0], [0, 1]] };
    for e in op.frames.iter().flatten().copied().chain(axes) {
        set.insert(e);
        set.insert([-e[0], -e[1]]);
    }
    set.into_iter().collect()
}

fn sample_quadratics(domain: &Domain, cfg: &TouchingTestConfig) -> Vec<Quadratic> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = domain.dim();
    let interior = domain.interior();
    (0..cfg.sample_count)
        .map(|_| {
            let node = interior[rng.gen_range(0..interior.len())];
            let x = domain.coords(node);
            let mut center = [0.0; 2];
            center[..dim].copy_from_slice(&x[..dim]);
            let mut p = [0.0; 2];
            for pk in p.iter_mut().take(dim) {
                *pk = rng.gen_range(-cfg.gradient_range..=cfg.gradient_range);
            }
            let hr = cfg.hessian_range;
            let m = if dim == 1 {
                SymMat::scalar(rng.gen_range(-hr..=hr))
            } else {
                SymMat::new2(rng.gen_range(-hr..=hr), rng.gen_range(-hr..=hr), rng.gen_range(-hr..=hr))
            };
            Quadratic { center, p, m }
        })
        .collect()
}

fn touch_test(
    u: &GridFunction,
    c0: f64,
    theta2: f64,
    op: &EllipticOperator,
    cfg: &TouchingTestConfig,
    side: TouchSide,
) -> Result<TouchingTestReport> {
    cfg.validate()?;
    let domain = u.domain();
    let dim = domain.dim();
    let tol = cfg.tolerance(domain.h());
    let directions = comparison_directions(op, dim);
    let quadratics = if domain.interior().is_empty() {
        Vec::new()
    } else {
        sample_quadratics(domain, cfg)
    };
    let sign = match side {
        TouchSide::Sub => 1.0,
        TouchSide::Super => -1.0,
    };

    let records: Vec<TouchRecord> = quadratics
        .par_iter()
        .enumerate()
        .map(|(sample, q)| {
            let w: Vec<f64> = (0..domain.node_count())
                .map(|i| sign * (u.value(i) - q.value(domain.coords(i))))
                .collect();
            let curvature = op.apply(&q.m);
            let mut out = Vec::new();
            for &i in domain.interior() {
                let strict = directions.iter().all(|&e| match domain.neighbor(i, e) {
                    Some(j) => w[i] > w[j],
                    None => false,
                });
                if !strict {
                    continue;
                }
                let xs = domain.coords(i);
                let g = q.gradient(xs);
                let slope = (g[0] * g[0] + g[1] * g[1]).sqrt();
                let degenerate = slope.powf(theta2) * curvature;
                let (value, margin) = match side {
                    TouchSide::Sub => {
                        let v = degenerate.min(curvature);
                        (v, c0 + tol - v)
                    }
                    TouchSide::Super => {
                        let v = degenerate.max(curvature);
                        (v, v + c0 + tol)
                    }
                };
                let mut x = [0.0; 2];
                x[..dim].copy_from_slice(&xs[..dim]);
                out.push(TouchRecord {
                    sample,
                    quadratic: *q,
                    node: i,
                    x,
                    slope,
                    curvature,
                    value,
                    margin,
                    passed: margin >= 0.0,
                });
            }
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    Ok(TouchingTestReport {
        side,
        c0,
        theta: theta2,
        tol,
        samples: quadratics.len(),
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PucciSide {
    /// `P⁻_h(u) <= C₀ + tol` fails.
    Minus,
    /// `P⁺_h(u) >= -C₀ - tol` fails.
    Plus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PucciViolation {
    pub node: usize,
    pub side: PucciSide,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PucciCheckReport {
    pub gamma: f64,
    pub checked: usize,
    pub violations: Vec<PucciViolation>,
}

impl PucciCheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,side,value\n");
        for v in &self.violations {
            let side = match v.side {
                PucciSide::Minus => "pucci_minus",
                PucciSide::Plus => "pucci_plus",
            };
            let _ = writeln!(out, "{},{},{}", v.node, side, fmt17(v.value));
        }
        out
    }
}

/// Where the central gradient exceeds `gamma`, the degenerate equation is
/// uniformly elliptic, so `P⁻_h(u) <= C₀ + tol` and `P⁺_h(u) >= -C₀ - tol`
/// must hold there.
pub fn large_gradient_pucci_check(
    u: &GridFunction,
    gamma: f64,
    c0: f64,
    lambda: f64,
    cap: f64,
    tol: f64,
) -> Result<PucciCheckReport> {
    if !(gamma > 0.0) {
        return Err(Error::config("verification.gamma", "must be positive"));
    }
    let domain = u.domain();
    let dim = domain.dim();
    let minus = EllipticOperator::new(OperatorKind::PucciMinus, lambda, cap, dim)?;
    let plus = EllipticOperator::new(OperatorKind::PucciPlus, lambda, cap, dim)?;
    let results: Vec<Option<(usize, f64, f64)>> = domain
        .interior()
        .par_iter()
        .map(|&i| {
            let g = match gradient_central(u, i) {
                Ok(g) => g,
                Err(_) => return Ok(None),
            };
            if (g[0] * g[0] + g[1] * g[1]).sqrt() <= gamma {
                return Ok(None);
            }
            Ok(Some((i, minus.apply_discrete(u, i)?, plus.apply_discrete(u, i)?)))
        })
        .collect::<Result<_>>()?;
    let mut report = PucciCheckReport {
        gamma,
        checked: 0,
        violations: Vec::new(),
    };
    for (node, lo, hi) in results.into_iter().flatten() {
        report.checked += 1;
        if !(lo <= c0 + tol) {
            report.violations.push(PucciViolation {
                node,
                side: PucciSide::Minus,
                value: lo,
            });
        }
        if !(hi >= -c0 - tol) {
            report.violations.push(PucciViolation {
                node,
                side: PucciSide::Plus,
                value: hi,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainSpec;
    use crate::verification::oracle::{OnePhaseOracle, TwoPhaseOracle};

    fn square(h: f64) -> std::sync::Arc<Domain> {
        Domain::build(DomainSpec::square(1.0, h)).unwrap()
    }

    #[test]
    fn quadratic_derivatives() {
        let q = Quadratic {
            center: [0.1, -0.2],
            p: [1.0, 2.0],
            m: SymMat::new2(2.0, 0.5, -1.0),
        };
        let x = [0.4, 0.3];
        let g = q.gradient(&x);
        let dh = 1e-6;
        for k in 0..2 {
            let mut a = x;
            let mut b = x;
            a[k] += dh;
            b[k] -= dh;
            let fd = (q.value(&a) - q.value(&b)) / (2.0 * dh);
            assert!((fd - g[k]).abs() < 1e-8);
        }
        assert_eq!(q.value(&q.center), 0.0);
    }

    #[test]
    fn zero_function_passes_both_sides() {
        let d = square(1.0 / 16.0);
        let u = GridFunction::zeros(d);
        let cfg = TouchingTestConfig::default();
        for op in [
            EllipticOperator::negative_trace(2),
            EllipticOperator::new(OperatorKind::PucciMinus, 1.0, 2.0, 2).unwrap(),
        ] {
            let sub = touch_test_subsolution(&u, 0.0, 3.0, &op, &cfg).unwrap();
            let sup = touch_test_supersolution(&u, 0.0, 3.0, &op, &cfg).unwrap();
            assert!(!sub.records.is_empty());
            assert!(sub.passed(), "{}", sub.summary());
            assert!(sup.passed(), "{}", sup.summary());
        }
    }

    #[test]
    fn concave_paraboloid_is_caught_as_subsolution() {
        for h in [1.0 / 16.0, 1.0 / 32.0] {
            let d = square(h);
            let u = GridFunction::from_fn(d, |x| -(x[0] * x[0] + x[1] * x[1])).unwrap();
            let op = EllipticOperator::negative_trace(2);
            let report = touch_test_subsolution(&u, 0.0, 1.0, &op, &TouchingTestConfig::default()).unwrap();
            assert!(report.failures() > 0, "{}", report.summary());
        }
    }

    #[test]
    fn convex_paraboloid_is_caught_as_supersolution() {
        let d = square(1.0 / 16.0);
        let u = GridFunction::from_fn(d, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        let op = EllipticOperator::negative_trace(2);
        let report = touch_test_supersolution(&u, 0.0, 1.0, &op, &TouchingTestConfig::default()).unwrap();
        assert!(report.failures() > 0);
        assert!(report.worst_margin() < 0.0);
    }

    #[test]
    fn one_phase_oracle_passes() {
        let o = OnePhaseOracle::new(1.0, 2).unwrap();
        let d = square(1.0 / 32.0);
        let (u, f) = o.sample(&d).unwrap();
        let c0 = f.sup_norm();
        let cfg = TouchingTestConfig::default();
        let sub = touch_test_subsolution(&u, c0, 1.0, &o.operator(), &cfg).unwrap();
        let sup = touch_test_supersolution(&u, c0, 1.0, &o.operator(), &cfg).unwrap();
        assert!(sub.passed(), "{}", sub.summary());
        assert!(sup.passed(), "{}", sup.summary());
    }

    #[test]
    fn two_phase_oracle_passes() {
        let o = TwoPhaseOracle::new(1.0, 3.0).unwrap();
        let d = Domain::build(DomainSpec::interval(1.0, 1.0 / 64.0)).unwrap();
        let (u, _) = o.sample(&d).unwrap();
        let cfg = TouchingTestConfig::default();
        let sub = touch_test_subsolution(&u, o.source_sup(), 3.0, &o.operator(), &cfg).unwrap();
        let sup = touch_test_supersolution(&u, o.source_sup(), 3.0, &o.operator(), &cfg).unwrap();
        assert!(!sub.records.is_empty() && !sup.records.is_empty());
        assert!(sub.passed(), "{}", sub.summary());
        assert!(sup.passed(), "{}", sup.summary());
    }

    #[test]
    fn reports_are_deterministic() {
        let d = square(1.0 / 16.0);
        let u = GridFunction::from_fn(d, |x| x[0].abs().powf(1.5) - x[1]).unwrap();
        let op = EllipticOperator::negative_trace(2);
        let cfg = TouchingTestConfig {
            seed: 11,
            ..TouchingTestConfig::default()
        };
        let a = touch_test_subsolution(&u, 1.0, 1.0, &op, &cfg).unwrap();
        let b = touch_test_subsolution(&u, 1.0, 1.0, &op, &cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn affine_steep_passes_pucci_check() {
        let d = square(1.0 / 16.0);
        let u = GridFunction::from_fn(d, |x| 3.0 * x[0] - 2.0 * x[1] + 0.5).unwrap();
        let r = large_gradient_pucci_check(&u, 1.0, 0.0, 1.0, 2.0, 1e-9).unwrap();
        assert_eq!(r.checked, u.domain().interior().len());
        assert!(r.passed());
    }

    #[test]
    fn one_phase_oracle_passes_pucci_check_away_from_origin() {
        let o = OnePhaseOracle::new(1.0, 1).unwrap();
        let d = Domain::build(DomainSpec::interval(1.0, 1.0 / 128.0)).unwrap();
        let (u, f) = o.sample(&d).unwrap();
        let r = large_gradient_pucci_check(&u, 1.1, f.sup_norm(), 1.0, 1.0, 1e-3).unwrap();
        assert!(r.checked > 0);
        assert!(r.passed(), "{:?}", r.violations.first());
    }

    #[test]
    fn convex_paraboloid_fails_pucci_check() {
        let d = square(1.0 / 16.0);
        let u = GridFunction::from_fn(d, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        let r = large_gradient_pucci_check(&u, 0.5, 0.0, 1.0, 1.0, 1e-9).unwrap();
        assert!(r.violations.iter().any(|v| v.side == PucciSide::Plus));
        assert!(large_gradient_pucci_check(&u, 0.0, 0.0, 1.0, 1.0, 0.0).is_err());
    }
}
