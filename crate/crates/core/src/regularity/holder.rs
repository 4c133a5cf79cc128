use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{gradient_central, norm, GridFunction};

use super::minimax::{minimax_affine, MinimaxFit};

/// Affine errors below this are treated as exact fits.
pub const SMOOTH_FLOOR: f64 = 1e-10;
/// Largest RMS deviation (in log units) of a log-log fit that still yields
/// an exponent.
pub const FIT_RESIDUAL_MAX: f64 = 0.15;

fn offset(x: &[f64], x0: &[f64; 2], dim: usize) -> f64 {
    (0..dim).map(|k| (x[k] - x0[k]).powi(2)).sum::<f64>().sqrt()
}

/// Minimax affine fit of `u` over the nodes in the closed ball `B_r(x0)`.
pub fn best_affine_error(u: &GridFunction, x0: &[f64; 2], r: f64) -> Result<MinimaxFit> {
    let domain = u.domain();
    let dim = domain.dim();
    let reach = r * (1.0 + 1e-12);
    let mut xs = Vec::new();
    let mut us = Vec::new();
    for i in 0..domain.node_count() {
        let x = domain.coords(i);
        if offset(x, x0, dim) <= reach {
            let mut p = [0.0; 2];
            p[..dim].copy_from_slice(&x[..dim]);
            xs.push(p);
            us.push(u.value(i));
        }
    }
    if xs.len() < dim + 2 {
        return Err(Error::Resolution(format!(
            "ball of radius {r} around {x0:?} holds {} nodes, need {}",
            xs.len(),
            dim + 2
        )));
    }
    let fit = minimax_affine(&xs, &us, dim)?;
    let sup = us.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if fit.error > 2.0 * sup + 1e-12 {
        return Err(Error::NumericalFailure(format!(
            "affine error {} exceeds twice the local sup {sup}",
            fit.error
        )));
    }
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    pub radii: Vec<f64>,
    pub errors: Vec<f64>,
    /// Slope of `log E` against `log r`.
    pub slope: f64,
    /// RMS deviation of the log-log fit.
    pub residual: f64,
    /// Radii entering the fit.
    pub used: usize,
    pub smooth: bool,
}

impl HolderEstimate {
    /// `slope - 1`, reported only for a non-smooth fit over at least four
    /// radii with residual at most [`FIT_RESIDUAL_MAX`].
    pub fn alpha_hat(&self) -> Option<f64> {
        (!self.smooth && self.used >= 4 && self.residual <= FIT_RESIDUAL_MAX).then_some(self.slope - 1.0)
    }
}

/// Radii `extent·ρ^k`, `k = 0..=n_scales`, where `extent` is the domain's
/// half-width.
pub fn estimate_gradient_holder(u: &GridFunction, x0: &[f64; 2], rho: f64, n_scales: usize) -> Result<HolderEstimate> {
    let extent = u.domain().spec().extent;
    estimate_gradient_holder_within(u, x0, extent, rho, n_scales)
}

/// Radii `r_max·ρ^k`, `k = 0..=n_scales`.
pub fn estimate_gradient_holder_within(
    u: &GridFunction,
    x0: &[f64; 2],
    r_max: f64,
    rho: f64,
    n_scales: usize,
) -> Result<HolderEstimate> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::config("regularity.rho", format!("must lie in (0, 1), got {rho}")));
    }
    if !(r_max > 0.0) {
        return Err(Error::config("regularity.r_max", "must be positive"));
    }
    let h = u.domain().h();
    let smallest = r_max * rho.powi(n_scales as i32);
    if smallest < 4.0 * h * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!(
            "smallest radius {smallest} is below four grid spacings ({})",
            4.0 * h
        )));
    }
    let radii: Vec<f64> = (0..=n_scales).map(|k| r_max * rho.powi(k as i32)).collect();
    let errors = radii
        .iter()
        .map(|&r| best_affine_error(u, x0, r).map(|f| f.error))
        .collect::<Result<Vec<_>>>()?;
    let smooth = errors.last().is_some_and(|&e| e < SMOOTH_FLOOR);
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(&errors)
        .filter(|(_, &e)| e >= SMOOTH_FLOOR)
        .map(|(r, e)| (r.ln(), e.ln()))
        .collect();
    let (slope, residual) = log_fit(&pts);
    Ok(HolderEstimate {
        radii,
        errors,
        slope,
        residual,
        used: pts.len(),
        smooth,
    })
}

fn log_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rms = (pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, rms)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictedExponent {
    pub value: f64,
    /// The admissible range is `(0, value)`, open at the top.
    pub supremum: bool,
    pub note: String,
}

/// `min(α₀, 1/(1+θ₂))`.
pub fn predicted_exponent(theta2: f64, alpha0: f64) -> Result<PredictedExponent> {
    if !(theta2 > 0.0 && theta2.is_finite()) {
        return Err(Error::config("degeneracy.theta2", format!("must be positive, got {theta2}")));
    }
    if !(alpha0 > 0.0 && alpha0 <= 1.0) {
        return Err(Error::config("regularity.alpha0", format!("must lie in (0, 1], got {alpha0}")));
    }
    let sharp = 1.0 / (1.0 + theta2);
    let supremum = sharp >= alpha0 && alpha0 < 1.0;
    let (value, note) = if supremum {
        (
            alpha0,
            format!("supremum, not attained: every exponent in (0, {alpha0}) is admissible"),
        )
    } else if sharp <= alpha0 {
        (sharp, format!("degeneracy-limited exponent 1/(1+theta2) = {sharp}"))
    } else {
        (alpha0, format!("limited by the homogeneous exponent {alpha0}"))
    };
    Ok(PredictedExponent { value, supremum, note })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C1AlphaCertificate {
    pub seminorm: f64,
    pub normalizer: f64,
    pub ratio: f64,
    pub pairs: usize,
}

/// Discrete `C^{1,α}` seminorm on `B_τ(0)` over node pairs at least `2h`
/// apart, divided by `‖u‖_∞ + max{C₀, C₀^{1/(1+θ₂)}}`.
pub fn c1alpha_certificate(
    u: &GridFunction,
    tau: f64,
    alpha: f64,
    c0: f64,
    theta2: f64,
) -> Result<C1AlphaCertificate> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::config("regularity.tau", format!("must lie in (0, 1), got {tau}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::config("regularity.alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    let domain = u.domain();
    let dim = domain.dim();
    let h = domain.h();
    let nodes: Vec<(usize, [f64; 2])> = domain
        .interior()
        .iter()
        .filter(|&&i| norm(&domain.coords(i)[..dim]) <= tau * (1.0 + 1e-12))
        .map(|&i| gradient_central(u, i).map(|g| (i, g)))
        .collect::<Result<_>>()?;
    let min_sep = 2.0 * h * (1.0 - 1e-9);
    let (seminorm, pairs) = nodes
        .par_iter()
        .enumerate()
        .map(|(a, (i, gi))| {
            let xi = domain.coords(*i);
            let mut best = 0.0f64;
            let mut count = 0usize;
            for (j, gj) in &nodes[a + 1..] {
                let xj = domain.coords(*j);
                let sep = (0..dim).map(|k| (xi[k] - xj[k]).powi(2)).sum::<f64>().sqrt();
                if sep < min_sep {
                    continue;
                }
                count += 1;
                let jump = ((gi[0] - gj[0]).powi(2) + (gi[1] - gj[1]).powi(2)).sqrt();
                best = best.max(jump / sep.powf(alpha));
            }
            (best, count)
        })
        .reduce(|| (0.0, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
    let normalizer = u.sup_norm() + c0.max(c0.powf(1.0 / (1.0 + theta2)));
    let ratio = if normalizer > 0.0 { seminorm / normalizer } else { 0.0 };
    Ok(C1AlphaCertificate {
        seminorm,
        normalizer,
        ratio,
        pairs,
    })
}
