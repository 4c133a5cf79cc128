use crate::error::{Error, Result};
use crate::grid::{Domain, DomainSpec, GridFunction};
use crate::operators::{EllipticOperator, ExactOperator, SymMat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledConstants {
    pub r: f64,
    pub k: f64,
    pub c0: f64,
    pub c0_bar: f64,
    pub theta2: f64,
}

impl ScaledConstants {
    /// `K = ‖u‖_∞ + max(C₀, C₀^{1/(1+θ₂)})` unless overridden, and
    /// `C̄₀ = C₀ max(r^{2+θ₂}/K^{1+θ₂}, r²/K)`.
    pub fn new(u_sup: f64, c0: f64, theta2: f64, r: f64, k_override: Option<f64>) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::config("scaling.r", format!("must lie in (0, 1], got {r}")));
        }
        if !(c0 >= 0.0) || !(theta2 > 0.0) {
            return Err(Error::config("scaling.C0", "need C0 >= 0 and theta2 > 0"));
        }
        let k = match k_override {
            Some(k) => k,
            None => u_sup + c0.max(c0.powf(1.0 / (1.0 + theta2))),
        };
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::config("scaling.K", format!("must be positive, got {k}")));
        }
        let c0_bar = c0 * (r.powf(2.0 + theta2) / k.powf(1.0 + theta2)).max(r * r / k);
        Ok(ScaledConstants {
            r,
            k,
            c0,
            c0_bar,
            theta2,
        })
    }
}

/// `F̄(M) = (r²/K) F((K/r²) M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledOperator {
    pub base: EllipticOperator,
    pub r: f64,
    pub k: f64,
}

impl ExactOperator for ScaledOperator {
    fn apply_exact(&self, m: &SymMat) -> f64 {
        let s = self.k / (self.r * self.r);
        self.base.apply(&m.scale(s)) / s
    }

    fn constants(&self) -> (f64, f64) {
        (self.base.lambda, self.base.cap)
    }
}

/// `v(x) = u(rx)/K` on the same shape with spacing `h/r`, so that `rx` lands
/// on the nodes of `u`. `r` must be a power of 1/2.
pub fn scale_problem(
    u: &GridFunction,
    c0: f64,
    theta2: f64,
    r: f64,
    k_override: Option<f64>,
    op: &EllipticOperator,
) -> Result<(GridFunction, ScaledConstants, ScaledOperator)> {
    let consts = ScaledConstants::new(u.sup_norm(), c0, theta2, r, k_override)?;
    let exponent = -r.log2();
    if (exponent - exponent.round()).abs() > 1e-12 {
        return Err(Error::config("scaling.r", format!("{r} is not a power of 1/2")));
    }
    let source = u.domain();
    let spec = source.spec();
    let scaled_spec = DomainSpec {
        spacing: spec.spacing / r,
        ..spec.clone()
    };
    if scaled_spec.cells().is_err() || scaled_spec.spacing > spec.extent {
        return Err(Error::config(
            "scaling.r",
            format!("r = {r} does not map the grid of spacing {} onto itself", spec.spacing),
        ));
    }
    let target = Domain::build(scaled_spec)?;
    let mut values = Vec::with_capacity(target.node_count());
    for node in target.nodes() {
        let src = source.node_at(node.index).ok_or_else(|| {
            Error::config("scaling.r", format!("scaled node {:?} has no preimage", node.index))
        })?;
        values.push(u.value(src) / consts.k);
    }
    let v = GridFunction::new(target, values)?;
    let scaled = ScaledOperator {
        base: op.clone(),
        r,
        k: consts.k,
    };
    Ok((v, consts, scaled))
}
