//! Randomized ordering checks for the regularized discrete equation: data
//! ordered one way must produce solutions ordered the same way.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::degeneracy::{DegeneracyParams, ExponentField};
use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};
use crate::io::fmt17;
use crate::operators::EllipticOperator;
use crate::solver::{solve_with_exponent, Problem, SolveConfig, SolveDiagnostics};

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonConfig {
    pub trials: usize,
    pub seed: u64,
    /// Upper bound of the random constant source gap `δf`.
    pub delta_f_max: f64,
    /// Upper bound of the random constant boundary gap `δg`.
    pub delta_g_max: f64,
    pub solve: SolveConfig,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        ComparisonConfig {
            trials: 50,
            seed: 0,
            delta_f_max: 0.5,
            delta_g_max: 0.5,
            solve: SolveConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTrial {
    pub trial: usize,
    pub delta_f: f64,
    pub delta_g: f64,
    /// `min (w - u)` over all nodes.
    pub min_margin: f64,
    pub min_interior_margin: f64,
    /// Node of the smallest margin.
    pub worst_node: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub epsilon: f64,
    pub trials: Vec<ComparisonTrial>,
}

impl ComparisonReport {
    pub fn min_margin(&self) -> f64 {
        self.trials.iter().map(|t| t.min_margin).fold(f64::INFINITY, f64::min)
    }

    pub fn min_interior_margin(&self) -> f64 {
        self.trials
            .iter()
            .map(|t| t.min_interior_margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,epsilon,delta_f,delta_g,min_margin,min_interior_margin,worst_node\n");
        for t in &self.trials {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                t.trial,
                fmt17(self.epsilon),
                fmt17(t.delta_f),
                fmt17(t.delta_g),
                fmt17(t.min_margin),
                fmt17(t.min_interior_margin),
                t.worst_node
            );
        }
        out
    }
}

/// Solves both problems with the same exponent field and measures `w - u`.
/// `below` must carry data no larger than `above`.
pub fn compare_ordered(
    below: &Problem,
    above: &Problem,
    theta: &ExponentField,
    epsilon: f64,
    cfg: &SolveConfig,
) -> Result<(GridFunction, GridFunction)> {
    let mut diagnostics = SolveDiagnostics::default();
    let u = solve_with_exponent(theta, epsilon, below, cfg, None, 0, &mut diagnostics)?.u;
    let w = solve_with_exponent(theta, epsilon, above, cfg, None, 0, &mut diagnostics)?.u;
    Ok((u, w))
}

/// Margins of `w - u`: `(min over all, min over interior, argmin)`.
pub fn ordering_margins(u: &GridFunction, w: &GridFunction) -> (f64, f64, usize) {
    let domain = u.domain();
    let mut all = f64::INFINITY;
    let mut interior = f64::INFINITY;
    let mut worst = 0;
    for i in 0..domain.node_count() {
        let m = w.value(i) - u.value(i);
        if m < all {
            all = m;
            worst = i;
        }
        if domain.is_interior(i) {
            interior = interior.min(m);
        }
    }
    (all, interior, worst)
}

/// Smooth field `θ₁ + (θ₂-θ₁)·s(x)` with `s` a random plane wave in `[0,1]`.
fn random_exponent(domain: &Arc<Domain>, params: &DegeneracyParams, rng: &mut ChaCha8Rng) -> Result<ExponentField> {
    let k = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let dim = domain.dim();
    let field = GridFunction::from_fn(domain.clone(), |x| {
        let arg: f64 = (0..dim).map(|j| k[j] * x[j]).sum::<f64>() + phase;
        params.theta1 + (params.theta2 - params.theta1) * 0.5 * (1.0 + arg.sin())
    })?;
    ExponentField::new(field, params.theta1, params.theta2)
}

/// `a₀ + a·x + b sin(k·x + φ)` with coefficients bounded by `amplitude`.
fn random_smooth(domain: &Arc<Domain>, amplitude: f64, rng: &mut ChaCha8Rng) -> Result<GridFunction> {
    let a0 = rng.gen_range(-amplitude..=amplitude) * 0.5;
    let a = [rng.gen_range(-0.25..=0.25) * amplitude, rng.gen_range(-0.25..=0.25) * amplitude];
    let b = rng.gen_range(-0.25..=0.25) * amplitude;
    let k = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let dim = domain.dim();
    GridFunction::from_fn(domain.clone(), |x| {
        let lin: f64 = (0..dim).map(|j| a[j] * x[j]).sum();
        let arg: f64 = (0..dim).map(|j| k[j] * x[j]).sum::<f64>() + phase;
        a0 + lin + b * arg.sin()
    })
}

/// For each trial draws smooth `θ`, `f`, `g` and gaps `δf, δg >= 0`; solves
/// with `(f - δf, g - δg)` for `u` and `(f + δf, g + δg)` for `w`, and
/// requires `u <= w` at every node. Violations are returned as an error
/// carrying every offending trial.
pub fn comparison_harness(
    domain: &Arc<Domain>,
    op: &EllipticOperator,
    params: &DegeneracyParams,
    cfg: &ComparisonConfig,
) -> Result<ComparisonReport> {
    params.validate()?;
    if cfg.trials == 0 {
        return Err(Error::config("verification.trials", "must be at least 1"));
    }
    if !(cfg.delta_f_max >= 0.0 && cfg.delta_g_max >= 0.0) {
        return Err(Error::config("verification.delta", "gaps must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = ComparisonReport {
        epsilon: params.epsilon,
        trials: Vec::with_capacity(cfg.trials),
    };
    let mut dump = String::new();
    for trial in 0..cfg.trials {
        let theta = random_exponent(domain, params, &mut rng)?;
        let f = random_smooth(domain, 1.0, &mut rng)?;
        let g = random_smooth(domain, 1.0, &mut rng)?;
        let delta_f = rng.gen_range(0.0..=cfg.delta_f_max);
        let delta_g = rng.gen_range(0.0..=cfg.delta_g_max);
        let shift = |v: &GridFunction, s: f64| v.map(|x| x + s);
        let below = Problem::new(shift(&f, -delta_f)?, shift(&g, -delta_g)?, op.clone())?;
        let above = Problem::new(shift(&f, delta_f)?, shift(&g, delta_g)?, op.clone())?;
        let (u, w) = compare_ordered(&below, &above, &theta, params.epsilon, &cfg.solve)?;
        let (min_margin, min_interior_margin, worst_node) = ordering_margins(&u, &w);
        if min_margin < 0.0 {
            let _ = writeln!(
                dump,
                "trial {trial}: w - u = {} at node {worst_node} (x = {:?}, u = {}, w = {}, theta = {}, delta_f = {}, delta_g = {})",
                fmt17(min_margin),
                domain.coords(worst_node),
                fmt17(u.value(worst_node)),
                fmt17(w.value(worst_node)),
                fmt17(theta.values()[worst_node]),
                fmt17(delta_f),
                fmt17(delta_g),
            );
        }
        report.trials.push(ComparisonTrial {
            trial,
            delta_f,
            delta_g,
            min_margin,
            min_interior_margin,
            worst_node,
        });
    }
    if !dump.is_empty() {
        return Err(Error::ComparisonViolation(dump));
    }
    Ok(report)
}
