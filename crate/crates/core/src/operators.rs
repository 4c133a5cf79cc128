//! (λ,Λ)-elliptic operators `F(D²u)` in the decreasing sign convention:
//! `λ‖N‖ <= F(M) - F(M+N) <= Λ‖N‖` for `N >= 0`, so the model operator is
//! `-tr M` and subsolutions satisfy `F <= C₀` at touching maxima.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{direction_norm_sq, Direction, Domain, GridFunction};

/// Symmetric matrix of size 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat {
    pub dim: usize,
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymMat {
    pub fn new2(a11: f64, a12: f64, a22: f64) -> Self {
        SymMat { dim: 2, a11, a12, a22 }
    }

    pub fn scalar(a: f64) -> Self {
        SymMat { dim: 1, a11: a, a12: 0.0, a22: 0.0 }
    }

    pub fn zero(dim: usize) -> Self {
        SymMat { dim, a11: 0.0, a12: 0.0, a22: 0.0 }
    }

    pub fn identity(dim: usize) -> Self {
        SymMat::diag(dim, 1.0, 1.0)
    }

    pub fn diag(dim: usize, a: f64, b: f64) -> Self {
        match dim {
            1 => SymMat::scalar(a),
            _ => SymMat::new2(a, 0.0, b),
        }
    }

    pub fn trace(&self) -> f64 {
        match self.dim {
            1 => self.a11,
            _ => self.a11 + self.a22,
        }
    }

    /// Eigenvalues in ascending order (one entry used in 1D).
    pub fn eigenvalues(&self) -> [f64; 2] {
        match self.dim {
            1 => [self.a11, self.a11],
            _ => {
                let mean = 0.5 * (self.a11 + self.a22);
                let half_diff = 0.5 * (self.a11 - self.a22);
                let rad = half_diff.hypot(self.a12);
                [mean - rad, mean + rad]
            }
        }
    }

    pub fn eigen_slice(&self) -> Vec<f64> {
        self.eigenvalues()[..self.dim].to_vec()
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        SymMat {
            dim: self.dim,
            a11: self.a11 + other.a11,
            a12: self.a12 + other.a12,
            a22: self.a22 + other.a22,
        }
    }

    pub fn scale(&self, s: f64) -> SymMat {
        SymMat {
            dim: self.dim,
            a11: s * self.a11,
            a12: s * self.a12,
            a22: s * self.a22,
        }
    }

    pub fn square(&self) -> SymMat {
        match self.dim {
            1 => SymMat::scalar(self.a11 * self.a11),
            _ => SymMat::new2(
                self.a11 * self.a11 + self.a12 * self.a12,
                self.a12 * (self.a11 + self.a22),
                self.a12 * self.a12 + self.a22 * self.a22,
            ),
        }
    }

    /// `eᵀ M e`.
    pub fn quadratic(&self, e: &[f64]) -> f64 {
        match self.dim {
            1 => self.a11 * e[0] * e[0],
            _ => self.a11 * e[0] * e[0] + 2.0 * self.a12 * e[0] * e[1] + self.a22 * e[1] * e[1],
        }
    }

    /// `M v`.
    pub fn apply(&self, v: &[f64]) -> [f64; 2] {
        match self.dim {
            1 => [self.a11 * v[0], 0.0],
            _ => [
                self.a11 * v[0] + self.a12 * v[1],
                self.a12 * v[0] + self.a22 * v[1],
            ],
        }
    }
}

impl fmt::Display for SymMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dim {
            1 => write!(f, "[{:.6e}]", self.a11),
            _ => write!(
                f,
                "[[{:.6e}, {:.6e}], [{:.6e}, {:.6e}]]",
                self.a11, self.a12, self.a12, self.a22
            ),
        }
    }
}

/// `-Λ Σ_{e<0} e - λ Σ_{e>0} e` over the eigenvalues of `m`.
pub fn pucci_plus(m: &SymMat, lambda: f64, cap: f64) -> f64 {
    m.eigen_slice()
        .into_iter()
        .map(|e| if e < 0.0 { -cap * e } else { -lambda * e })
        .sum()
}

/// `-Λ Σ_{e>0} e - λ Σ_{e<0} e` over the eigenvalues of `m`.
pub fn pucci_minus(m: &SymMat, lambda: f64, cap: f64) -> f64 {
    m.eigen_slice()
        .into_iter()
        .map(|e| if e > 0.0 { -cap * e } else { -lambda * e })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    NegativeTrace,
    PucciPlus,
    PucciMinus,
    /// `w·(-tr M) + (1-w)·P⁻(M)`.
    ConvexCombination { weight: f64 },
}

impl OperatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::NegativeTrace => "negative_trace",
            OperatorKind::PucciPlus => "pucci_plus",
            OperatorKind::PucciMinus => "pucci_minus",
            OperatorKind::ConvexCombination { .. } => "convex_combination",
        }
    }

    /// Whether the operator is convex or concave in `M`, so that the
    /// interior C^{1,1} theory applies.
    pub fn is_convex_or_concave(&self) -> bool {
        !matches!(self, OperatorKind::ConvexCombination { .. })
    }
}

/// An orthogonal frame of lattice directions, one per dimension.
pub type Frame = Vec<Direction>;

pub fn default_frames(dim: usize) -> Vec<Frame> {
    match dim {
        1 => vec![vec![[1, 0]]],
        _ => vec![vec![[1, 0], [0, 1]], vec![[1, 1], [1, -1]]],
    }
}

/// Exact evaluation of an operator on symmetric matrices, plus its declared
/// ellipticity constants. Implemented by built-in operators and by their
/// rescalings.
pub trait ExactOperator: Sync {
    fn apply_exact(&self, m: &SymMat) -> f64;
    fn constants(&self) -> (f64, f64);
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticOperator {
    pub kind: OperatorKind,
    pub lambda: f64,
    /// Upper ellipticity constant Λ.
    pub cap: f64,
    pub frames: Vec<Frame>,
}

impl EllipticOperator {
    pub fn new(kind: OperatorKind, lambda: f64, cap: f64, dim: usize) -> Result<Self> {
        EllipticOperator::with_frames(kind, lambda, cap, default_frames(dim), dim)
    }

    pub fn negative_trace(dim: usize) -> Self {
        EllipticOperator {
            kind: OperatorKind::NegativeTrace,
            lambda: 1.0,
            cap: dim as f64,
            frames: default_frames(dim),
        }
    }

    pub fn with_frames(
        kind: OperatorKind,
        lambda: f64,
        cap: f64,
        frames: Vec<Frame>,
        dim: usize,
    ) -> Result<Self> {
        if !(lambda > 0.0) || !(cap >= lambda) || !cap.is_finite() {
            return Err(Error::config(
                "operator.lambda",
                format!("need 0 < lambda <= Lambda, got ({lambda}, {cap})"),
            ));
        }
        if let OperatorKind::ConvexCombination { weight } = kind {
            if !(0.0..=1.0).contains(&weight) {
                return Err(Error::config("operator.weight", "weight must lie in [0, 1]"));
            }
        }
        validate_frames(&frames, dim)?;
        Ok(EllipticOperator {
            kind,
            lambda,
            cap,
            frames,
        })
    }

    /// Chebyshev reach of the widest stencil direction.
    pub fn reach(&self) -> usize {
        self.frames
            .iter()
            .flatten()
            .map(|e| e[0].unsigned_abs().max(e[1].unsigned_abs()) as usize)
            .max()
            .unwrap_or(1)
            .max(1)
    }

    pub fn apply(&self, m: &SymMat) -> f64 {
        match self.kind {
            OperatorKind::NegativeTrace => -m.trace(),
            OperatorKind::PucciPlus => pucci_plus(m, self.lambda, self.cap),
            OperatorKind::PucciMinus => pucci_minus(m, self.lambda, self.cap),
            OperatorKind::ConvexCombination { weight } => {
                weight * (-m.trace()) + (1.0 - weight) * pucci_minus(m, self.lambda, self.cap)
            }
        }
    }

    /// Wide-stencil discrete operator at an interior node.
    pub fn apply_discrete(&self, u: &GridFunction, node: usize) -> Result<f64> {
        let domain = u.domain();
        if !domain.is_interior(node) {
            return Err(Error::Stencil {
                node,
                direction: [0, 0],
            });
        }
        self.discrete_raw(domain, u.values(), node)
    }

    pub(crate) fn discrete_raw(&self, domain: &Domain, values: &[f64], node: usize) -> Result<f64> {
        self.linearize(domain, values, node, None)
    }

    /// Evaluates the discrete operator at `node` and, when `partials` is
    /// given, appends `(node, ∂F_h/∂u_node)` for the active branch.
    pub(crate) fn linearize(
        &self,
        domain: &Domain,
        values: &[f64],
        node: usize,
        mut partials: Option<&mut Vec<(usize, f64)>>,
    ) -> Result<f64> {
        let dim = domain.dim();
        let h2 = domain.h() * domain.h();
        // (value, slope wrt δ) contributions of one frame, with stencil nodes.
        let frame_eval = |frame: &[Direction],
                          slope: &dyn Fn(f64) -> (f64, f64)|
         -> Result<(f64, [(usize, usize, f64, f64); 2])> {
            let mut total = 0.0;
            let mut parts = [(0usize, 0usize, 0.0f64, 0.0f64); 2];
            for (j, &e) in frame.iter().enumerate().take(dim) {
                let fwd = domain.neighbor(node, e).ok_or(Error::Stencil { node, direction: e })?;
                let bwd = domain
                    .neighbor(node, [-e[0], -e[1]])
                    .ok_or(Error::Stencil { node, direction: e })?;
                let scale = h2 * direction_norm_sq(e, dim);
                let delta = (values[fwd] - 2.0 * values[node] + values[bwd]) / scale;
                let (v, s) = slope(delta);
                total += v;
                parts[j] = (fwd, bwd, s, scale);
            }
            Ok((total, parts))
        };
        let push = |partials: &mut Option<&mut Vec<(usize, f64)>>,
                    parts: &[(usize, usize, f64, f64); 2],
                    weight: f64| {
            if let Some(out) = partials.as_deref_mut() {
                for &(fwd, bwd, s, scale) in parts.iter().take(dim) {
                    let c = weight * s / scale;
                    out.push((fwd, c));
                    out.push((bwd, c));
                    out.push((node, -2.0 * c));
                }
            }
        };
        let (lambda, cap) = (self.lambda, self.cap);
        let plus = move |d: f64| {
            if d > 0.0 {
                (-lambda * d, -lambda)
            } else {
                (-cap * d, -cap)
            }
        };
        let minus = move |d: f64| {
            if d > 0.0 {
                (-cap * d, -cap)
            } else {
                (-lambda * d, -lambda)
            }
        };
        let trace = |d: f64| (-d, -1.0);
        let axes: Frame = if dim == 1 {
            vec![[1, 0]]
        } else {
            vec![[1, 0], [0, 1]]
        };

        let extremal = |select_max: bool,
                        f: &dyn Fn(f64) -> (f64, f64)|
         -> Result<(f64, [(usize, usize, f64, f64); 2])> {
            let mut best: Option<(f64, [(usize, usize, f64, f64); 2])> = None;
            for frame in &self.frames {
                let (v, parts) = frame_eval(frame, f)?;
                let better = match best {
                    None => true,
                    Some((b, _)) => {
                        if select_max {
                            v > b
                        } else {
                            v < b
                        }
                    }
                };
                if better {
                    best = Some((v, parts));
                }
            }
            best.ok_or_else(|| Error::config("operator.frames", "no stencil frames"))
        };

        match self.kind {
            OperatorKind::NegativeTrace => {
                let (v, parts) = frame_eval(&axes, &trace)?;
                push(&mut partials, &parts, 1.0);
                Ok(v)
            }
            OperatorKind::PucciPlus => {
                let (v, parts) = extremal(true, &plus)?;
                push(&mut partials, &parts, 1.0);
                Ok(v)
            }
            OperatorKind::PucciMinus => {
                let (v, parts) = extremal(false, &minus)?;
                push(&mut partials, &parts, 1.0);
                Ok(v)
            }
            OperatorKind::ConvexCombination { weight } => {
                let (vt, pt) = frame_eval(&axes, &trace)?;
                let (vm, pm) = extremal(false, &minus)?;
                push(&mut partials, &pt, weight);
                push(&mut partials, &pm, 1.0 - weight);
                Ok(weight * vt + (1.0 - weight) * vm)
            }
        }
    }
}

impl ExactOperator for EllipticOperator {
    fn apply_exact(&self, m: &SymMat) -> f64 {
        self.apply(m)
    }

    fn constants(&self) -> (f64, f64) {
        (self.lambda, self.cap)
    }
}

fn validate_frames(frames: &[Frame], dim: usize) -> Result<()> {
    if frames.is_empty() {
        return Err(Error::config("operator.frames", "at least one frame is required"));
    }
    for frame in frames {
        if frame.len() != dim {
            return Err(Error::config(
                "operator.frames",
                format!("frame {frame:?} must have {dim} directions"),
            ));
        }
        for e in frame {
            if direction_norm_sq(*e, dim) == 0.0 {
                return Err(Error::config("operator.frames", "zero direction"));
            }
        }
        if dim == 2 {
            let (a, b) = (frame[0], frame[1]);
            if a[0] * b[0] + a[1] * b[1] != 0 {
                return Err(Error::config(
                    "operator.frames",
                    format!("frame {frame:?} is not orthogonal"),
                ));
            }
        }
    }
    Ok(())
}

/// Matrix norm used in the ellipticity band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EllipticityNorm {
    /// Largest eigenvalue of `N >= 0`.
    #[default]
    Spectral,
    /// Trace of `N >= 0`.
    Trace,
}

impl EllipticityNorm {
    pub fn of(self, n: &SymMat) -> f64 {
        match self {
            EllipticityNorm::Spectral => n.eigenvalues()[n.dim - 1].max(0.0),
            EllipticityNorm::Trace => n.trace(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EllipticityReport {
    pub samples: usize,
    /// Smallest `F(M)-F(M+N) - λ‖N‖` seen (relative to `‖N‖`).
    pub worst_lower_margin: f64,
    /// Smallest `Λ‖N‖ - (F(M)-F(M+N))` seen (relative to `‖N‖`).
    pub worst_upper_margin: f64,
    pub witness: Option<(SymMat, SymMat)>,
}

impl EllipticityReport {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

fn random_sym(rng: &mut ChaCha8Rng, dim: usize) -> SymMat {
    let scale = 10f64.powf(rng.gen_range(-1.0..1.0));
    match dim {
        1 => SymMat::scalar(scale * rng.gen_range(-1.0..1.0)),
        _ => SymMat::new2(
            scale * rng.gen_range(-1.0..1.0),
            scale * rng.gen_range(-1.0..1.0),
            scale * rng.gen_range(-1.0..1.0),
        ),
    }
}

/// Samples the ellipticity band and reports margins; never fails.
pub fn sample_ellipticity(
    op: &dyn ExactOperator,
    dim: usize,
    sample_count: usize,
    seed: u64,
    norm: EllipticityNorm,
    extra: &[(SymMat, SymMat)],
) -> EllipticityReport {
    let (lambda, cap) = op.constants();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(SymMat, SymMat)> = extra.to_vec();
    for _ in 0..sample_count {
        let m = random_sym(&mut rng, dim);
        let n = random_sym(&mut rng, dim).square();
        pairs.push((m, n));
    }
    let mut report = EllipticityReport {
        samples: pairs.len(),
        worst_lower_margin: f64::INFINITY,
        worst_upper_margin: f64::INFINITY,
        witness: None,
    };
    for (m, n) in pairs {
        let nn = norm.of(&n);
        if nn <= 0.0 {
            continue;
        }
        let drop = op.apply_exact(&m) - op.apply_exact(&m.add(&n));
        let slack = 1e-12 * (1.0 + op.apply_exact(&m).abs() + cap * nn);
        let lower = drop - lambda * nn;
        let upper = cap * nn - drop;
        report.worst_lower_margin = report.worst_lower_margin.min(lower / nn);
        report.worst_upper_margin = report.worst_upper_margin.min(upper / nn);
        if (lower < -slack || upper < -slack) && report.witness.is_none() {
            report.witness = Some((m, n));
        }
    }
    report
}

/// Asserts `λ‖N‖ <= F(M) - F(M+N) <= Λ‖N‖` on random samples.
pub fn check_uniform_ellipticity(
    op: &dyn ExactOperator,
    dim: usize,
    sample_count: usize,
    seed: u64,
    norm: EllipticityNorm,
) -> Result<EllipticityReport> {
    if sample_count == 0 {
        return Err(Error::config("sample_count", "must be at least 1"));
    }
    let report = sample_ellipticity(op, dim, sample_count, seed, norm, &[]);
    match report.witness {
        Some((m, n)) => {
            let (lambda, cap) = op.constants();
            Err(Error::Ellipticity(format!(
                "declared (λ,Λ) = ({lambda}, {cap}) fails at M = {m}, N = {n}: F(M)-F(M+N) = {:.6e}, ‖N‖ = {:.6e}",
                op.apply_exact(&m) - op.apply_exact(&m.add(&n)),
                norm.of(&n)
            )))
        }
        None => Ok(report),
    }
}
