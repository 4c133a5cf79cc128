//! Solver for the regularized transmission equation
//!
//! ```text
//! (ε + |Du|)^{θ(x)} [ε u + F(D²u)] = f   in Ω,   u = g on ∂Ω,
//! ```
//!
//! the fixed-point map `v ↦ u_ε^v` that couples `θ` to the sign of the
//! solution, the ε-continuation driver, the explicit barriers enclosing
//! every regularized solution, and the rescaling of sub/supersolutions.

mod banded;
mod barrier;
mod fixed_point;
mod regularized;
mod scaling;

use std::fmt::Write as _;
use std::sync::Arc;

pub use barrier::{
    barrier_exponent, barrier_scale, build_barrier_sub, build_barrier_super,
    check_discrete_subsolution, check_discrete_supersolution, BarrierCheck, BarrierOptions,
    BarrierSpec,
};
pub use fixed_point::{
    continuation, epsilon_levels, fixed_point_t, fixed_point_t_from, ContinuationResult,
    FixedPoint,
};
pub use regularized::{
    residual_regularized, residual_regularized_with, residual_sup, solve_regularized,
    solve_with_exponent, InnerSolve,
};
pub use scaling::{scale_problem, ScaledConstants, ScaledOperator};

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};
use crate::operators::EllipticOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonSchedule {
    /// `ε_n = 1/(n+1)`, n = 1, 2, ...
    Harmonic,
    /// `ε_n = 2^{-n}`, n = 1, 2, ...
    Geometric,
}

impl EpsilonSchedule {
    pub fn value(self, n: usize) -> f64 {
        match self {
            EpsilonSchedule::Harmonic => 1.0 / (n as f64 + 1.0),
            EpsilonSchedule::Geometric => 0.5f64.powi(n as i32),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EpsilonSchedule::Harmonic => "harmonic",
            EpsilonSchedule::Geometric => "geometric",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "harmonic" => Some(EpsilonSchedule::Harmonic),
            "geometric" => Some(EpsilonSchedule::Geometric),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerMethod {
    /// Pseudo-transient Newton on the whole grid with Gauss–Seidel fallback.
    Newton,
    /// Nodal nonlinear Gauss–Seidel only.
    GaussSeidel,
}

impl InnerMethod {
    pub fn name(self) -> &'static str {
        match self {
            InnerMethod::Newton => "newton",
            InnerMethod::GaussSeidel => "gauss_seidel",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "newton" => Some(InnerMethod::Newton),
            "gauss_seidel" => Some(InnerMethod::GaussSeidel),
            _ => None,
        }
    }
}

/// Discretization of `|Du|` inside the prefactor `(ε + |Du|)^θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientScheme {
    /// Central differences.
    Central,
    /// One-sided magnitudes oriented by the sign of `f`, which keep the
    /// whole scheme monotone.
    Upwind,
}

impl GradientScheme {
    pub fn name(self) -> &'static str {
        match self {
            GradientScheme::Central => "central",
            GradientScheme::Upwind => "upwind",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "central" => Some(GradientScheme::Central),
            "upwind" => Some(GradientScheme::Upwind),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub tol_inner: f64,
    pub tol_fixed_point: f64,
    pub tol_continuation: f64,
    /// Relaxation of Gauss–Seidel updates and of the Picard update of `T`.
    pub damping: f64,
    /// Initial pseudo-time step of the Newton globalization (relative to the
    /// Jacobian diagonal).
    pub pseudo_time_step: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    pub max_continuation_steps: usize,
    pub epsilon_schedule: EpsilonSchedule,
    pub method: InnerMethod,
    pub gradient: GradientScheme,
    pub keep_snapshots: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol_inner: 1e-9,
            tol_fixed_point: 1e-7,
            tol_continuation: 1e-6,
            damping: 1.0,
            pseudo_time_step: 1.0,
            max_inner_iters: 400,
            max_outer_iters: 100,
            max_continuation_steps: 64,
            epsilon_schedule: EpsilonSchedule::Geometric,
            method: InnerMethod::Newton,
            gradient: GradientScheme::Upwind,
            keep_snapshots: false,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("solver.tol_inner", self.tol_inner),
            ("solver.tol_fixed_point", self.tol_fixed_point),
            ("solver.tol_continuation", self.tol_continuation),
            ("solver.pseudo_time_step", self.pseudo_time_step),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::config("solver.damping", "must lie in (0, 1]"));
        }
        for (key, v) in [
            ("solver.max_inner_iters", self.max_inner_iters),
            ("solver.max_outer_iters", self.max_outer_iters),
            ("solver.max_continuation_steps", self.max_continuation_steps),
        ] {
            if v == 0 {
                return Err(Error::config(key, "must be a positive integer"));
            }
        }
        Ok(())
    }
}

/// Data of a Dirichlet problem: right-hand side `f` (interior values used),
/// boundary data `g` (boundary values used) and the operator.
#[derive(Debug, Clone)]
pub struct Problem {
    pub f: GridFunction,
    pub g: GridFunction,
    pub op: EllipticOperator,
}

impl Problem {
    pub fn new(f: GridFunction, g: GridFunction, op: EllipticOperator) -> Result<Self> {
        if !Arc::ptr_eq(f.domain(), g.domain()) {
            return Err(Error::ShapeMismatch("f and g live on different domains".into()));
        }
        let domain = f.domain();
        if op.reach() > domain.spec().reach {
            return Err(Error::config(
                "operator.frames",
                format!(
                    "stencil reach {} exceeds the domain's boundary layer {}",
                    op.reach(),
                    domain.spec().reach
                ),
            ));
        }
        Ok(Problem { f, g, op })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        self.f.domain()
    }

    /// `‖f‖_∞` over interior nodes.
    pub fn f_sup(&self) -> f64 {
        self.domain()
            .interior()
            .iter()
            .fold(0.0, |m, &i| m.max(self.f.value(i).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerRecord {
    pub epsilon: f64,
    pub outer: usize,
    pub iteration: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterRecord {
    pub epsilon: f64,
    pub iteration: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationRecord {
    pub epsilon: f64,
    pub outer_iterations: usize,
    /// `‖u_{ε_n} - u_{ε_{n-1}}‖_∞`; infinite for the first step.
    pub delta: f64,
    pub certificate: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SolveDiagnostics {
    pub inner: Vec<InnerRecord>,
    pub outer: Vec<OuterRecord>,
    pub continuation: Vec<ContinuationRecord>,
    pub snapshots: Vec<(f64, GridFunction)>,
    pub inner_converged: bool,
    pub fixed_point_converged: bool,
    pub cauchy: bool,
    pub averaging_restarts: usize,
    pub warnings: Vec<String>,
}

impl SolveDiagnostics {
    pub fn merge(&mut self, other: SolveDiagnostics) {
        self.inner.extend(other.inner);
        self.outer.extend(other.outer);
        self.continuation.extend(other.continuation);
        self.snapshots.extend(other.snapshots);
        self.averaging_restarts += other.averaging_restarts;
        self.warnings.extend(other.warnings);
    }

    /// One CSV row per recorded iteration:
    /// `phase,epsilon,outer,iteration,residual,delta`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,epsilon,outer,iteration,residual,delta\n");
        let f = crate::io::fmt17;
        for r in &self.inner {
            let _ = writeln!(
                out,
                "inner,{},{},{},{},",
                f(r.epsilon),
                r.outer,
                r.iteration,
                f(r.residual)
            );
        }
        for r in &self.outer {
            let _ = writeln!(out, "outer,{},{},{},,{}", f(r.epsilon), r.iteration, r.iteration, f(r.delta));
        }
        for (n, r) in self.continuation.iter().enumerate() {
            let _ = writeln!(
                out,
                "continuation,{},{},{},{},{}",
                f(r.epsilon),
                r.outer_iterations,
                n,
                f(r.certificate),
                f(r.delta)
            );
        }
        out
    }
}
