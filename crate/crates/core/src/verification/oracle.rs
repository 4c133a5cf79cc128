//! Closed-form pure-power solutions of the degenerate equation with the
//! operator `-tr`, used as exact references.

use std::sync::Arc;

use crate::degeneracy::validate_exponents;
use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};
use crate::operators::{EllipticOperator, SymMat};

/// `u(x) = |x|^{1+α}` with `α = 1/(1+θ)`, solving `|Du|^θ (-Δu) = f` with a
/// constant negative source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnePhaseOracle {
    pub theta: f64,
    pub dim: usize,
    pub alpha: f64,
    pub source: f64,
}

impl OnePhaseOracle {
    pub fn new(theta: f64, dim: usize) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::config(
                "degeneracy.theta",
                format!("oracle exponent must be positive, got {theta}"),
            ));
        }
        if !(dim == 1 || dim == 2) {
            return Err(Error::config("domain.dim", format!("dimension must be 1 or 2, got {dim}")));
        }
        let alpha = 1.0 / (1.0 + theta);
        let source = -(1.0 + alpha).powf(1.0 + theta) * (alpha + dim as f64 - 1.0);
        Ok(OnePhaseOracle {
            theta,
            dim,
            alpha,
            source,
        })
    }

    pub fn operator(&self) -> EllipticOperator {
        EllipticOperator::negative_trace(self.dim)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        radius(x, self.dim).powf(1.0 + self.alpha)
    }

    pub fn gradient(&self, x: &[f64]) -> [f64; 2] {
        power_gradient(x, self.dim, self.alpha)
    }

    pub fn hessian(&self, x: &[f64]) -> SymMat {
        power_hessian(x, self.dim, self.alpha)
    }

    /// `|Du|^θ F(D²u) - f` from the exact derivatives; undefined at the origin.
    pub fn exact_residual(&self, x: &[f64]) -> f64 {
        let g = self.gradient(x);
        let slope = (g[0] * g[0] + g[1] * g[1]).sqrt();
        slope.powf(self.theta) * self.operator().apply(&self.hessian(x)) - self.source
    }

    /// Nodal samples of `(u, f)`.
    pub fn sample(&self, domain: &Arc<Domain>) -> Result<(GridFunction, GridFunction)> {
        check_dim(domain, self.dim)?;
        let u = GridFunction::from_fn(domain.clone(), |x| self.value(x))?;
        let f = GridFunction::constant(domain.clone(), self.source);
        Ok((u, f))
    }
}

/// One-dimensional two-phase profile: `x^{1+α₁}` for `x >= 0` and
/// `-|x|^{1+α₂}` for `x < 0`, with a source that is constant on each side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhaseOracle {
    pub theta1: f64,
    pub theta2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub source_plus: f64,
    pub source_minus: f64,
}

impl TwoPhaseOracle {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        validate_exponents(theta1, theta2)?;
        let alpha1 = 1.0 / (1.0 + theta1);
        let alpha2 = 1.0 / (1.0 + theta2);
        Ok(TwoPhaseOracle {
            theta1,
            theta2,
            alpha1,
            alpha2,
            source_plus: -(1.0 + alpha1).powf(1.0 + theta1) * alpha1,
            source_minus: (1.0 + alpha2).powf(1.0 + theta2) * alpha2,
        })
    }

    pub fn operator(&self) -> EllipticOperator {
        EllipticOperator::negative_trace(1)
    }

    /// `‖f‖_∞`.
    pub fn source_sup(&self) -> f64 {
        self.source_plus.abs().max(self.source_minus.abs())
    }

    pub fn value(&self, x: f64) -> f64 {
        if x >= 0.0 {
            x.powf(1.0 + self.alpha1)
        } else {
            -(-x).powf(1.0 + self.alpha2)
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x >= 0.0 {
            (1.0 + self.alpha1) * x.powf(self.alpha1)
        } else {
            (1.0 + self.alpha2) * (-x).powf(self.alpha2)
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        if x > 0.0 {
            (1.0 + self.alpha1) * self.alpha1 * x.powf(self.alpha1 - 1.0)
        } else {
            -(1.0 + self.alpha2) * self.alpha2 * (-x).powf(self.alpha2 - 1.0)
        }
    }

    /// Piecewise source; the jump point takes the midpoint value.
    pub fn source(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.source_plus
        } else if x < 0.0 {
            self.source_minus
        } else {
            0.5 * (self.source_plus + self.source_minus)
        }
    }

    /// The source convolved with the unit-mass bump of radius `delta`.
    pub fn source_mollified(&self, x: f64, delta: f64) -> f64 {
        let t = (x / delta).clamp(-1.0, 1.0);
        self.source_minus + (self.source_plus - self.source_minus) * bump_cdf(t)
    }

    /// `|u'|^{θ_i}(-u'') - f` on the phase containing `x`; undefined at 0.
    pub fn exact_residual(&self, x: f64) -> f64 {
        let theta = if x > 0.0 { self.theta1 } else { self.theta2 };
        self.derivative(x).abs().powf(theta) * (-self.second_derivative(x)) - self.source(x)
    }

    pub fn sample(&self, domain: &Arc<Domain>) -> Result<(GridFunction, GridFunction)> {
        check_dim(domain, 1)?;
        let u = GridFunction::from_fn(domain.clone(), |x| self.value(x[0]))?;
        let f = GridFunction::from_fn(domain.clone(), |x| self.source(x[0]))?;
        Ok((u, f))
    }

    pub fn sample_mollified_source(&self, domain: &Arc<Domain>, delta: f64) -> Result<GridFunction> {
        check_dim(domain, 1)?;
        if !(delta > 0.0) {
            return Err(Error::config("data.delta", "mollification radius must be positive"));
        }
        GridFunction::from_fn(domain.clone(), |x| self.source_mollified(x[0], delta))
    }
}

fn check_dim(domain: &Domain, dim: usize) -> Result<()> {
    if domain.dim() != dim {
        return Err(Error::ShapeMismatch(format!(
            "oracle is {dim}-dimensional, domain has dimension {}",
            domain.dim()
        )));
    }
    Ok(())
}

fn radius(x: &[f64], dim: usize) -> f64 {
    x[..dim].iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn power_gradient(x: &[f64], dim: usize, alpha: f64) -> [f64; 2] {
    let r = radius(x, dim);
    let mut g = [0.0; 2];
    if r == 0.0 {
        return g;
    }
    let s = (1.0 + alpha) * r.powf(alpha - 1.0);
    for k in 0..dim {
        g[k] = s * x[k];
    }
    g
}

/// `(1+α) r^{α-1} [I + (α-1) x̂ x̂ᵀ]`.
fn power_hessian(x: &[f64], dim: usize, alpha: f64) -> SymMat {
    let r = radius(x, dim);
    let s = (1.0 + alpha) * r.powf(alpha - 1.0);
    if dim == 1 {
        return SymMat::scalar(s * alpha);
    }
    let (n1, n2) = (x[0] / r, x[1] / r);
    SymMat::new2(
        s * (1.0 + (alpha - 1.0) * n1 * n1),
        s * (alpha - 1.0) * n1 * n2,
        s * (1.0 + (alpha - 1.0) * n2 * n2),
    )
}

fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 / (t * t - 1.0)).exp()
    }
}

/// Mass of the normalized bump on `[-1, t]` by composite Simpson.
fn bump_cdf(t: f64) -> f64 {
    fn simpson(a: f64, b: f64) -> f64 {
        let n = 400;
        let step = (b - a) / n as f64;
        let mut acc = bump(a) + bump(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * bump(a + i as f64 * step);
        }
        acc * step / 3.0
    }
    if t <= -1.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    simpson(-1.0, t) / simpson(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainSpec;
    use approx::assert_relative_eq;

    #[test]
    fn one_phase_sources() {
        let o = OnePhaseOracle::new(1.0, 1).unwrap();
        assert_relative_eq!(o.alpha, 0.5);
        assert_relative_eq!(o.source, -1.125, epsilon = 1e-14);
        let o = OnePhaseOracle::new(3.0, 2).unwrap();
        assert_relative_eq!(o.source, -3.0517578125, epsilon = 1e-12);
        assert!(OnePhaseOracle::new(0.0, 1).is_err());
        assert!(OnePhaseOracle::new(-1.0, 2).is_err());
    }

    #[test]
    fn one_phase_residual_vanishes_off_origin() {
        for (theta, dim) in [(1.0, 1), (3.0, 2), (0.5, 2)] {
            let o = OnePhaseOracle::new(theta, dim).unwrap();
            for x in [[0.3, 0.0], [-0.7, 0.2], [0.05, -0.9]] {
                assert!(o.exact_residual(&x).abs() < 1e-10, "theta {theta} dim {dim} at {x:?}");
            }
        }
    }

    #[test]
    fn two_phase_values() {
        let o = TwoPhaseOracle::new(1.0, 3.0).unwrap();
        assert_relative_eq!(o.alpha1, 0.5);
        assert_relative_eq!(o.alpha2, 0.25);
        assert_relative_eq!(o.source_plus, -1.125, epsilon = 1e-14);
        assert_relative_eq!(o.source_minus, 0.6103515625, epsilon = 1e-14);
        assert_relative_eq!(o.source_sup(), 1.125, epsilon = 1e-14);
        assert_eq!(o.value(0.0), 0.0);
        assert_eq!(o.derivative(0.0), 0.0);
        assert!(o.derivative(-1e-300).abs() < 1e-60);
        for x in [0.2, 0.9, -0.1, -0.8] {
            assert!(o.exact_residual(x).abs() < 1e-10);
        }
        assert!(TwoPhaseOracle::new(3.0, 1.0).is_err());
    }

    #[test]
    fn mollified_source_interpolates() {
        let o = TwoPhaseOracle::new(1.0, 3.0).unwrap();
        assert_relative_eq!(o.source_mollified(0.5, 0.1), o.source_plus);
        assert_relative_eq!(o.source_mollified(-0.5, 0.1), o.source_minus);
        assert_relative_eq!(o.source_mollified(0.0, 0.1), o.source(0.0), epsilon = 1e-12);
        let mut last = o.source_mollified(-0.1, 0.1);
        for k in -9..=10 {
            let v = o.source_mollified(k as f64 * 0.01, 0.1);
            assert!(v <= last + 1e-15);
            last = v;
        }
    }

    #[test]
    fn sampling_checks_dimension() {
        let d2 = Domain::build(DomainSpec::square(1.0, 0.25)).unwrap();
        assert!(TwoPhaseOracle::new(1.0, 3.0).unwrap().sample(&d2).is_err());
        let d1 = Domain::build(DomainSpec::interval(1.0, 0.25)).unwrap();
        let (u, f) = OnePhaseOracle::new(1.0, 1).unwrap().sample(&d1).unwrap();
        assert_relative_eq!(u.value(0), 1.0);
        assert_relative_eq!(f.value(2), -1.125, epsilon = 1e-14);
    }
}
