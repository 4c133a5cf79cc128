//! The sign-dependent degeneracy exponent built from a trial function `v`:
//! clamp `v` to a smoothed phase indicator, mollify it at scale ε, and
//! interpolate between θ₁ (positive phase) and θ₂ (negative phase).

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Direction, Domain, GridFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegeneracyParams {
    pub theta1: f64,
    pub theta2: f64,
    pub epsilon: f64,
}

impl DegeneracyParams {
    pub fn new(theta1: f64, theta2: f64, epsilon: f64) -> Result<Self> {
        let p = DegeneracyParams {
            theta1,
            theta2,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    /// Equal rates are accepted here: they describe a one-phase run with a
    /// frozen exponent.
    pub fn validate(&self) -> Result<()> {
        validate_exponents_allow_equal(self.theta1, self.theta2)?;
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::config(
                "epsilon",
                format!("regularization must lie in (0, 1), got {}", self.epsilon),
            ));
        }
        Ok(())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        DegeneracyParams::new(self.theta1, self.theta2, epsilon)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.theta1 + self.theta2)
    }
}

/// Degeneracy rates must satisfy `0 < θ₁ < θ₂`. Equal rates are accepted
/// only through [`validate_exponents_allow_equal`].
pub fn validate_exponents(theta1: f64, theta2: f64) -> Result<()> {
    if !(theta1 > 0.0 && theta1 < theta2 && theta2.is_finite()) {
        return Err(Error::config(
            "degeneracy.theta1",
            format!("degeneracy rates must satisfy 0 < theta1 < theta2, got ({theta1}, {theta2})"),
        ));
    }
    Ok(())
}

/// One-phase runs freeze `θ₁ = θ₂`; this is the only relaxation allowed.
pub fn validate_exponents_allow_equal(theta1: f64, theta2: f64) -> Result<()> {
    if theta1 > 0.0 && theta1 == theta2 && theta1.is_finite() {
        return Ok(());
    }
    validate_exponents(theta1, theta2)
}

/// Nodal exponent values with `θ₁ <= θ <= θ₂`.
#[derive(Debug, Clone)]
pub struct ExponentField {
    field: GridFunction,
}

impl ExponentField {
    pub fn new(field: GridFunction, theta1: f64, theta2: f64) -> Result<Self> {
        let slack = 1e-12 * theta2.abs().max(1.0);
        if let Some((i, v)) = field
            .values()
            .iter()
            .enumerate()
            .find(|(_, &v)| v < theta1 - slack || v > theta2 + slack)
        {
            return Err(Error::NumericalFailure(format!(
                "exponent {v} at node {i} outside [{theta1}, {theta2}]"
            )));
        }
        Ok(ExponentField { field })
    }

    pub fn constant(domain: Arc<Domain>, theta: f64) -> Self {
        ExponentField {
            field: GridFunction::constant(domain, theta),
        }
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn as_grid(&self) -> &GridFunction {
        &self.field
    }
}

pub fn clamp_indicator(v: &GridFunction, epsilon: f64) -> Result<GridFunction> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::config("epsilon", "must lie in (0, 1)"));
    }
    v.map(|x| ((x + epsilon) / (2.0 * epsilon)).clamp(0.0, 1.0))
}

/// How samples beyond the node set enter the convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extension {
    Zero,
    Constant(f64),
}

/// The standard bump `exp(1/(|x/ε|²-1))` sampled on lattice offsets strictly
/// inside the ε-ball and normalized to unit sum.
#[derive(Debug, Clone)]
pub struct Mollifier {
    pub epsilon: f64,
    pub h: f64,
    pub taps: Vec<(Direction, f64)>,
}

impl Mollifier {
    pub fn new(dim: usize, epsilon: f64, h: f64) -> Result<Self> {
        if epsilon < h * (1.0 - 1e-12) {
            return Err(Error::Resolution(format!(
                "mollifier radius {epsilon} is below the grid spacing {h}"
            )));
        }
        let reach = (epsilon / h).ceil() as i32;
        let second = if dim == 1 { 0..=0 } else { -reach..=reach };
        let mut taps = Vec::new();
        for b in second {
            for a in -reach..=reach {
                let r = ((a * a + b * b) as f64).sqrt() * h / epsilon;
                if r < 1.0 {
                    taps.push(([a, b], (1.0 / (r * r - 1.0)).exp()));
                }
            }
        }
        let total: f64 = taps.iter().map(|t| t.1).sum();
        for t in &mut taps {
            t.1 /= total;
        }
        Ok(Mollifier { epsilon, h, taps })
    }

    /// Discrete Lipschitz constant of `g * η` along lattice axes for any
    /// `g` with values in `[0, 1]`: `max_e Σ_k |w_k - w_{k-e}| / h`.
    pub fn lipschitz_bound(&self, dim: usize) -> f64 {
        let weight = |k: Direction| {
            self.taps
                .iter()
                .find(|t| t.0 == k)
                .map(|t| t.1)
                .unwrap_or(0.0)
        };
        (0..dim)
            .map(|axis| {
                let mut e = [0, 0];
                e[axis] = 1;
                // Union of the tap support and its shift.
                let mut support: Vec<Direction> = self.taps.iter().map(|t| t.0).collect();
                support.extend(self.taps.iter().map(|t| [t.0[0] + e[0], t.0[1] + e[1]]));
                support.sort();
                support.dedup();
                support
                    .iter()
                    .map(|&k| (weight(k) - weight([k[0] - e[0], k[1] - e[1]])).abs())
                    .sum::<f64>()
                    / self.h
            })
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, g: &GridFunction, outside: Extension) -> Result<GridFunction> {
        let domain = g.domain();
        let values = g.values();
        let fill = match outside {
            Extension::Zero => 0.0,
            Extension::Constant(c) => c,
        };
        let out: Vec<f64> = (0..domain.node_count())
            .into_par_iter()
            .map(|node| {
                let base = domain.node(node).index;
                let mut acc = 0.0;
                for &(k, w) in &self.taps {
                    let v = domain
                        .node_at([base[0] + k[0], base[1] + k[1]])
                        .map(|j| values[j])
                        .unwrap_or(fill);
                    acc += w * v;
                }
                acc
            })
            .collect();
        GridFunction::new(domain.clone(), out)
    }
}

/// `g * η_ε` with `g` zero-extended beyond the node set.
pub fn mollify(g: &GridFunction, epsilon: f64) -> Result<GridFunction> {
    mollify_with(g, epsilon, Extension::Zero)
}

pub fn mollify_with(g: &GridFunction, epsilon: f64, outside: Extension) -> Result<GridFunction> {
    let domain = g.domain();
    Mollifier::new(domain.dim(), epsilon, domain.h())?.apply(g, outside)
}

/// `θ = θ₁ h + (1-h) θ₂` with `h` the mollified clamp of `v`.
pub fn theta_field(v: &GridFunction, params: &DegeneracyParams) -> Result<ExponentField> {
    let DegeneracyParams {
        theta1,
        theta2,
        epsilon,
    } = *params;
    let smooth = mollify(&clamp_indicator(v, epsilon)?, epsilon)?;
    let field = smooth.map(|s| {
        // Partition-of-unity sums carry rounding; snap the saturated phases.
        let s = if s > 1.0 - 1e-12 {
            1.0
        } else if s < 1e-12 {
            0.0
        } else {
            s
        };
        (theta1 * s + (1.0 - s) * theta2).clamp(theta1, theta2)
    })?;
    ExponentField::new(field, theta1, theta2)
}

/// The limiting exponent `θ₁` on `{u > tol}`, `θ₂` on `{u < -tol}`, and
/// `None` on the undetermined set `{|u| <= tol}`.
#[derive(Debug, Clone)]
pub struct PhaseExponent {
    pub values: Vec<Option<f64>>,
}

impl PhaseExponent {
    pub fn undetermined_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

pub fn limit_exponent(u: &GridFunction, theta1: f64, theta2: f64, sign_tol: f64) -> Result<PhaseExponent> {
    if !(sign_tol >= 0.0) {
        return Err(Error::config("sign_tol", "must be nonnegative"));
    }
    let values = u
        .values()
        .iter()
        .map(|&x| {
            if x > sign_tol {
                Some(theta1)
            } else if x < -sign_tol {
                Some(theta2)
            } else {
                None
            }
        })
        .collect();
    Ok(PhaseExponent { values })
}
