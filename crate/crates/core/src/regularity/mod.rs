//! Measured regularity of grid solutions: phase sets and free boundary,
//! best affine approximation errors across geometric radii, gradient Hölder
//! exponents, and a discrete `C^{1,α}` seminorm.

mod holder;
mod minimax;

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::Result;
use crate::grid::{Domain, GridFunction};
use crate::io::fmt17;

pub use holder::{
    best_affine_error, c1alpha_certificate, estimate_gradient_holder, estimate_gradient_holder_within,
    predicted_exponent, C1AlphaCertificate, HolderEstimate, PredictedExponent, FIT_RESIDUAL_MAX, SMOOTH_FLOOR,
};
pub use minimax::{minimax_affine, Affine, MinimaxFit};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseSets {
    pub omega_plus: Vec<usize>,
    pub omega_minus: Vec<usize>,
    pub free_boundary: Vec<usize>,
}

fn axis_neighbors(domain: &Domain, i: usize) -> impl Iterator<Item = usize> + '_ {
    let dirs: &[[i32; 2]] = if domain.dim() == 1 {
        &[[1, 0], [-1, 0]]
    } else {
        &[[1, 0], [-1, 0], [0, 1], [0, -1]]
    };
    dirs.iter().filter_map(move |&e| domain.neighbor(i, e))
}

/// `{u > tol}`, `{u < -tol}`, and the free boundary: nodes in neither set
/// next to one of them, plus both ends of every axis edge where `u` jumps
/// from one phase to the other.
pub fn extract_free_boundary(u: &GridFunction, sign_tol: f64) -> PhaseSets {
    let domain = u.domain();
    let tol = sign_tol.max(0.0);
    let phase = |i: usize| -> i8 {
        let v = u.value(i);
        if v > tol {
            1
        } else if v < -tol {
            -1
        } else {
            0
        }
    };
    let mut sets = PhaseSets::default();
    for i in 0..domain.node_count() {
        let p = phase(i);
        match p {
            1 => sets.omega_plus.push(i),
            -1 => sets.omega_minus.push(i),
            _ => {}
        }
        let on_boundary = axis_neighbors(domain, i).any(|j| {
            let q = phase(j);
            (p == 0 && q != 0) || p * q == -1
        });
        if on_boundary {
            sets.free_boundary.push(i);
        }
    }
    sets
}

/// One probe of the Hölder measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub x0: [f64; 2],
    /// The estimate, or why this probe could not be measured (too close to
    /// the boundary, radii below grid resolution, ...).
    pub estimate: std::result::Result<HolderEstimate, String>,
}

impl ProbeRecord {
    pub fn alpha_hat(&self) -> Option<f64> {
        self.estimate.as_ref().ok().and_then(HolderEstimate::alpha_hat)
    }

    pub fn smooth(&self) -> bool {
        self.estimate.as_ref().is_ok_and(|e| e.smooth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityOptions {
    pub rho: f64,
    pub n_scales: usize,
    /// Largest probe radius; `None` uses the domain extent.
    pub r_max: Option<f64>,
    pub sign_tol: f64,
    pub theta2: f64,
    pub alpha0: f64,
}

impl Default for RegularityOptions {
    fn default() -> Self {
        RegularityOptions {
            rho: 0.5,
            n_scales: 5,
            r_max: None,
            sign_tol: 0.0,
            theta2: 1.0,
            alpha0: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub phases: PhaseSets,
    pub probes: Vec<ProbeRecord>,
    pub predicted: PredictedExponent,
    pub alpha0: f64,
}

impl RegularityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x1,x2,radii,slope,alpha_hat,residual,smooth,note\n");
        for p in &self.probes {
            match &p.estimate {
                Ok(e) => {
                    let alpha = e.alpha_hat().map(fmt17).unwrap_or_default();
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},",
                        fmt17(p.x0[0]),
                        fmt17(p.x0[1]),
                        e.radii.len(),
                        fmt17(e.slope),
                        alpha,
                        fmt17(e.residual),
                        e.smooth
                    );
                }
                Err(msg) => {
                    let _ = writeln!(
                        out,
                        "{},{},0,,,,false,\"{}\"",
                        fmt17(p.x0[0]),
                        fmt17(p.x0[1]),
                        msg.replace('"', "'")
                    );
                }
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let alphas: Vec<f64> = self.probes.iter().filter_map(ProbeRecord::alpha_hat).collect();
        let smooth = self.probes.iter().filter(|p| p.smooth()).count();
        let unmeasured = self.probes.iter().filter(|p| p.estimate.is_err()).count();
        let mut s = format!(
            "phases: {} positive, {} negative, {} free-boundary nodes\nprobes: {} ({} smooth, {} with a reliable fit, {} unmeasurable)\n",
            self.phases.omega_plus.len(),
            self.phases.omega_minus.len(),
            self.phases.free_boundary.len(),
            self.probes.len(),
            smooth,
            alphas.len(),
            unmeasured
        );
        if !alphas.is_empty() {
            let min = alphas.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = alphas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mean = alphas.iter().sum::<f64>() / alphas.len() as f64;
            let _ = writeln!(
                s,
                "alpha_hat: min {} mean {} max {}",
                fmt17(min),
                fmt17(mean),
                fmt17(max)
            );
        }
        let _ = writeln!(
            s,
            "predicted exponent {} (alpha0 = {}){}",
            fmt17(self.predicted.value),
            fmt17(self.alpha0),
            if self.predicted.supremum {
                ", supremum, not attained"
            } else {
                ""
            }
        );
        s
    }
}

/// Phase sets plus Hölder probes at `probes` (default: every free-boundary
/// node and the origin). A probe that cannot be measured is recorded with
/// its reason instead of failing the whole report.
pub fn analyze_regularity(
    u: &GridFunction,
    probes: Option<&[[f64; 2]]>,
    opts: &RegularityOptions,
) -> Result<RegularityReport> {
    let predicted = predicted_exponent(opts.theta2, opts.alpha0)?;
    let domain = u.domain();
    let phases = extract_free_boundary(u, opts.sign_tol);
    let points: Vec<[f64; 2]> = match probes {
        Some(p) => p.to_vec(),
        None => {
            let mut pts: Vec<[f64; 2]> = phases
                .free_boundary
                .iter()
                .map(|&i| {
                    let x = domain.coords(i);
                    [x[0], if domain.dim() == 2 { x[1] } else { 0.0 }]
                })
                .collect();
            pts.push([0.0, 0.0]);
            pts
        }
    };
    let r_max = opts.r_max.unwrap_or(domain.spec().extent);
    let records = points
        .par_iter()
        .map(|x0| ProbeRecord {
            x0: *x0,
            estimate: estimate_gradient_holder_within(u, x0, r_max, opts.rho, opts.n_scales).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(RegularityReport {
        phases,
        probes: records,
        predicted,
        alpha0: opts.alpha0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainSpec;

    #[test]
    fn linear_function_has_single_zero_node() {
        let d = Domain::build(DomainSpec::interval(1.0, 0.125)).unwrap();
        let u = GridFunction::from_fn(d.clone(), |x| x[0]).unwrap();
        let s = extract_free_boundary(&u, 0.0);
        assert_eq!(s.free_boundary, vec![d.node_at([0, 0]).unwrap()]);
        assert_eq!(s.omega_plus.len(), 8);
        assert_eq!(s.omega_minus.len(), 8);
    }

    #[test]
    fn positive_constant_has_no_free_boundary() {
        let d = Domain::build(DomainSpec::square(1.0, 0.25)).unwrap();
        let u = GridFunction::constant(d.clone(), 1.0);
        let s = extract_free_boundary(&u, 0.0);
        assert_eq!(s.omega_plus.len(), d.node_count());
        assert!(s.free_boundary.is_empty() && s.omega_minus.is_empty());
    }

    #[test]
    fn sign_jump_marks_both_ends() {
        let d = Domain::build(DomainSpec::interval(1.0, 0.25)).unwrap();
        let u = GridFunction::from_fn(d.clone(), |x| x[0] + 0.1).unwrap();
        let s = extract_free_boundary(&u, 0.0);
        let xs: Vec<f64> = s.free_boundary.iter().map(|&i| d.coords(i)[0]).collect();
        assert_eq!(xs, vec![-0.25, 0.0]);
    }

    #[test]
    fn report_csv_has_one_row_per_probe() {
        let d = Domain::build(DomainSpec::interval(1.0, 1.0 / 128.0)).unwrap();
        let u = GridFunction::from_fn(d, |x| x[0] * x[0].abs().sqrt()).unwrap();
        let opts = RegularityOptions {
            theta2: 1.0,
            ..RegularityOptions::default()
        };
        let r = analyze_regularity(&u, None, &opts).unwrap();
        assert_eq!(r.to_csv().lines().count(), r.probes.len() + 1);
        assert!(r.summary().contains("predicted exponent"));
    }
}
