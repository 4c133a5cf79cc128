//! INI run configuration: `[section]` headers, `key = value` lines and `#`
//! comments. Every key is optional except the degeneracy rates.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ini::Ini;

use super::expr::Expr;
use crate::degeneracy::validate_exponents_allow_equal;
use crate::error::{Error, Result};
use crate::grid::{Domain, DomainSpec, GridFunction, Shape};
use crate::io::fmt17;
use crate::operators::{default_frames, EllipticOperator, Frame, OperatorKind};
use crate::regularity::RegularityOptions;
use crate::solver::{EpsilonSchedule, GradientScheme, InnerMethod, Problem, SolveConfig};
use crate::verification::TouchingTestConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSection {
    pub shape: Shape,
    pub dim: usize,
    pub extent: f64,
    pub h: f64,
    pub exterior_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSection {
    pub kind: OperatorKind,
    pub lambda: f64,
    pub cap: f64,
    /// `None` selects the default frames of the dimension.
    pub frames: Option<Vec<Frame>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSection {
    pub f: String,
    pub g: String,
    /// Optional exact solution; the solve manifest then records the sup-error.
    pub exact: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationSection {
    pub touching: TouchingTestConfig,
    pub gamma: f64,
    /// Replaces `‖f‖_∞` as the bound in the extremal inequalities.
    pub c0: Option<f64>,
    /// Slack of the large-gradient check; `None` uses the touching slack.
    pub pucci_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularitySection {
    /// `None` probes every free-boundary node and the origin.
    pub probes: Option<Vec<[f64; 2]>>,
    pub rho: f64,
    pub n_scales: usize,
    pub r_max: Option<f64>,
    pub tau: f64,
    pub alphas: Vec<f64>,
    pub alpha0: f64,
    pub sign_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub csv: bool,
    pub pgm: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub domain: DomainSection,
    pub operator: OperatorSection,
    pub theta1: f64,
    pub theta2: f64,
    pub data: DataSection,
    pub solver: SolveConfig,
    pub verification: VerificationSection,
    pub regularity: RegularitySection,
    pub output: OutputSection,
}

const KNOWN: &[(&str, &[&str])] = &[
    ("", &["seed"]),
    ("domain", &["shape", "dim", "extent", "h", "R"]),
    ("operator", &["kind", "lambda", "Lambda", "frames", "weight"]),
    ("degeneracy", &["theta1", "theta2"]),
    ("data", &["f", "g", "exact"]),
    (
        "solver",
        &[
            "tol_inner",
            "tol_fixed_point",
            "tol_continuation",
            "damping",
            "pseudo_time_step",
            "max_inner_iters",
            "max_outer_iters",
            "max_continuation_steps",
            "epsilon_schedule",
            "method",
            "gradient",
            "keep_snapshots",
        ],
    ),
    (
        "verification",
        &[
            "sample_count",
            "gradient_range",
            "hessian_range",
            "tol_touch",
            "gamma",
            "C0",
            "pucci_tol",
        ],
    ),
    (
        "regularity",
        &["probes", "rho", "n_scales", "r_max", "tau", "alphas", "alpha0", "sign_tol"],
    ),
    ("output", &["directory", "formats"]),
];

/// Sections written by the CLI next to the echoed configuration.
const IGNORED_SECTIONS: &[&str] = &["manifest"];

struct Lookup<'a> {
    ini: &'a Ini,
}

impl Lookup<'_> {
    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        let sec = if section.is_empty() { None } else { Some(section) };
        self.ini.section(sec).and_then(|s| s.get(key)).map(str::trim)
    }

    fn path(section: &str, key: &str) -> String {
        if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        }
    }

    fn num(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(s) => parse_number(s).ok_or_else(|| Error::config(Self::path(section, key), format!("not a number: {s:?}"))),
        }
    }

    fn opt_num(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.raw(section, key) {
            None | Some("none") | Some("") => Ok(None),
            Some(s) => parse_number(s)
                .map(Some)
                .ok_or_else(|| Error::config(Self::path(section, key), format!("not a number: {s:?}"))),
        }
    }

    fn count(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(s) => s
                .parse::<usize>()
                .map_err(|_| Error::config(Self::path(section, key), format!("not a nonnegative integer: {s:?}"))),
        }
    }

    fn text(&self, section: &str, key: &str, default: &str) -> String {
        self.raw(section, key).unwrap_or(default).to_string()
    }
}

/// Decimal numbers, optionally as a quotient `a/b`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

fn parse_frames(s: &str) -> Result<Option<Vec<Frame>>> {
    if s.trim() == "default" {
        return Ok(None);
    }
    let bad = || Error::config("operator.frames", format!("cannot read frames {s:?}"));
    let mut frames = Vec::new();
    for frame in s.split(';') {
        let mut dirs = Vec::new();
        for dir in frame.split_whitespace() {
            let comps: Vec<i32> = dir
                .split(',')
                .map(|c| c.trim().parse::<i32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            match comps.as_slice() {
                [a] => dirs.push([*a, 0]),
                [a, b] => dirs.push([*a, *b]),
                _ => return Err(bad()),
            }
        }
        if dirs.is_empty() {
            return Err(bad());
        }
        frames.push(dirs);
    }
    Ok(Some(frames))
}

fn frames_text(frames: &[Frame]) -> String {
    frames
        .iter()
        .map(|f| f.iter().map(|e| format!("{},{}", e[0], e[1])).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("; ")
}

fn parse_points(s: &str) -> Result<Vec<[f64; 2]>> {
    let mut out = Vec::new();
    for item in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let coords: Vec<f64> = item
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| parse_number(t).ok_or_else(|| Error::config("regularity.probes", format!("bad coordinate {t:?}"))))
            .collect::<Result<_>>()?;
        match coords.as_slice() {
            [a] => out.push([*a, 0.0]),
            [a, b] => out.push([*a, *b]),
            _ => return Err(Error::config("regularity.probes", format!("bad point {item:?}"))),
        }
    }
    Ok(out)
}

fn default_alpha0(kind: &OperatorKind) -> f64 {
    if kind.is_convex_or_concave() {
        1.0
    } else {
        0.75
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        for (section, props) in ini.iter() {
            let name = section.unwrap_or("");
            if IGNORED_SECTIONS.contains(&name) {
                continue;
            }
            let known = KNOWN
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| Error::config(name, "unknown section"))?;
            for (key, _) in props.iter() {
                if !known.1.contains(&key) {
                    return Err(Error::config(Lookup::path(name, key), "unknown key"));
                }
            }
        }
        let l = Lookup { ini: &ini };

        let seed = match l.raw("", "seed") {
            None => 0,
            Some(s) => s
                .parse::<u64>()
                .map_err(|_| Error::config("seed", format!("not a nonnegative integer: {s:?}")))?,
        };

        let shape_text = l.text("domain", "shape", "interval");
        let shape = Shape::parse(&shape_text)
            .ok_or_else(|| Error::config("domain.shape", format!("unknown shape {shape_text:?}")))?;
        let default_dim = if shape == Shape::Box { 2 } else { 1 };
        let domain = DomainSection {
            shape,
            dim: l.count("domain", "dim", default_dim)?,
            extent: l.num("domain", "extent", 1.0)?,
            h: l.num("domain", "h", 1.0 / 64.0)?,
            exterior_radius: l.num("domain", "R", 1.0)?,
        };

        let kind_text = l.text("operator", "kind", "negative_trace");
        let weight = l.num("operator", "weight", 0.5)?;
        let kind = match kind_text.as_str() {
            "negative_trace" => OperatorKind::NegativeTrace,
            "pucci_plus" => OperatorKind::PucciPlus,
            "pucci_minus" => OperatorKind::PucciMinus,
            "convex_combination" => OperatorKind::ConvexCombination { weight },
            other => return Err(Error::config("operator.kind", format!("unknown operator {other:?}"))),
        };
        let default_cap = if kind == OperatorKind::NegativeTrace {
            domain.dim as f64
        } else {
            1.0
        };
        let operator = OperatorSection {
            kind,
            lambda: l.num("operator", "lambda", 1.0)?,
            cap: l.num("operator", "Lambda", default_cap)?,
            frames: match l.raw("operator", "frames") {
                None => None,
                Some(s) => parse_frames(s)?,
            },
        };

        let theta1 = l
            .opt_num("degeneracy", "theta1")?
            .ok_or_else(|| Error::config("degeneracy.theta1", "required"))?;
        let theta2 = l
            .opt_num("degeneracy", "theta2")?
            .ok_or_else(|| Error::config("degeneracy.theta2", "required"))?;

        let data = DataSection {
            f: l.text("data", "f", "0"),
            g: l.text("data", "g", "0"),
            exact: l.raw("data", "exact").filter(|s| !s.is_empty()).map(str::to_string),
        };

        let d = SolveConfig::default();
        let schedule_text = l.text("solver", "epsilon_schedule", d.epsilon_schedule.name());
        let method_text = l.text("solver", "method", d.method.name());
        let gradient_text = l.text("solver", "gradient", d.gradient.name());
        let snapshots_text = l.text("solver", "keep_snapshots", "false");
        let solver = SolveConfig {
            tol_inner: l.num("solver", "tol_inner", d.tol_inner)?,
            tol_fixed_point: l.num("solver", "tol_fixed_point", d.tol_fixed_point)?,
            tol_continuation: l.num("solver", "tol_continuation", d.tol_continuation)?,
            damping: l.num("solver", "damping", d.damping)?,
            pseudo_time_step: l.num("solver", "pseudo_time_step", d.pseudo_time_step)?,
            max_inner_iters: l.count("solver", "max_inner_iters", d.max_inner_iters)?,
            max_outer_iters: l.count("solver", "max_outer_iters", d.max_outer_iters)?,
            max_continuation_steps: l.count("solver", "max_continuation_steps", d.max_continuation_steps)?,
            epsilon_schedule: EpsilonSchedule::parse(&schedule_text).ok_or_else(|| {
                Error::config("solver.epsilon_schedule", format!("unknown schedule {schedule_text:?}"))
            })?,
            method: InnerMethod::parse(&method_text)
                .ok_or_else(|| Error::config("solver.method", format!("unknown method {method_text:?}")))?,
            gradient: GradientScheme::parse(&gradient_text)
                .ok_or_else(|| Error::config("solver.gradient", format!("unknown scheme {gradient_text:?}")))?,
            keep_snapshots: match snapshots_text.as_str() {
                "true" => true,
                "false" => false,
                other => return Err(Error::config("solver.keep_snapshots", format!("not a boolean: {other:?}"))),
            },
        };

        let t = TouchingTestConfig::default();
        let verification = VerificationSection {
            touching: TouchingTestConfig {
                sample_count: l.count("verification", "sample_count", t.sample_count)?,
                seed,
                gradient_range: l.num("verification", "gradient_range", t.gradient_range)?,
                hessian_range: l.num("verification", "hessian_range", t.hessian_range)?,
                tol_touch: l.opt_num("verification", "tol_touch")?,
            },
            gamma: l.num("verification", "gamma", 1.0)?,
            c0: l.opt_num("verification", "C0")?,
            pucci_tol: l.opt_num("verification", "pucci_tol")?,
        };

        let r = RegularityOptions::default();
        let regularity = RegularitySection {
            probes: match l.raw("regularity", "probes") {
                None | Some("default") => None,
                Some(s) => Some(parse_points(s)?),
            },
            rho: l.num("regularity", "rho", r.rho)?,
            n_scales: l.count("regularity", "n_scales", r.n_scales)?,
            r_max: l.opt_num("regularity", "r_max")?,
            tau: l.num("regularity", "tau", 0.5)?,
            alphas: match l.raw("regularity", "alphas") {
                None => vec![1.0 / (1.0 + theta2)],
                Some(s) => s
                    .split(',')
                    .map(|a| {
                        parse_number(a).ok_or_else(|| Error::config("regularity.alphas", format!("bad exponent {a:?}")))
                    })
                    .collect::<Result<_>>()?,
            },
            alpha0: l.num("regularity", "alpha0", default_alpha0(&operator.kind))?,
            sign_tol: l.num("regularity", "sign_tol", r.sign_tol)?,
        };

        let formats = l.text("output", "formats", "csv,pgm");
        let mut output = OutputSection {
            directory: PathBuf::from(l.text("output", "directory", "out")),
            csv: false,
            pgm: false,
        };
        for f in formats.split(',').map(str::trim).filter(|f| !f.is_empty()) {
            match f {
                "csv" => output.csv = true,
                "pgm" => output.pgm = true,
                other => return Err(Error::config("output.formats", format!("unknown format {other:?}"))),
            }
        }

        let cfg = RunConfig {
            seed,
            domain,
            operator,
            theta1,
            theta2,
            data,
            solver,
            verification,
            regularity,
            output,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        validate_exponents_allow_equal(self.theta1, self.theta2)?;
        self.domain_spec().validate()?;
        self.operator()?;
        Expr::parse(&self.data.f).map_err(|e| Error::config("data.f", e.to_string()))?;
        Expr::parse(&self.data.g).map_err(|e| Error::config("data.g", e.to_string()))?;
        if let Some(x) = &self.data.exact {
            Expr::parse(x).map_err(|e| Error::config("data.exact", e.to_string()))?;
        }
        self.solver.validate()?;
        self.verification.touching.validate()?;
        if !(self.verification.gamma > 0.0) {
            return Err(Error::config("verification.gamma", "must be positive"));
        }
        let r = &self.regularity;
        if !(r.rho > 0.0 && r.rho < 1.0) {
            return Err(Error::config("regularity.rho", "must lie in (0, 1)"));
        }
        if !(r.tau > 0.0 && r.tau < 1.0) {
            return Err(Error::config("regularity.tau", "must lie in (0, 1)"));
        }
        if r.alphas.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return Err(Error::config("regularity.alphas", "exponents must lie in (0, 1]"));
        }
        if !(r.alpha0 > 0.0 && r.alpha0 <= 1.0) {
            return Err(Error::config("regularity.alpha0", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Overrides the seed everywhere it is used.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.verification.touching.seed = seed;
    }

    pub fn operator(&self) -> Result<EllipticOperator> {
        let frames = self
            .operator
            .frames
            .clone()
            .unwrap_or_else(|| default_frames(self.domain.dim));
        EllipticOperator::with_frames(self.operator.kind, self.operator.lambda, self.operator.cap, frames, self.domain.dim)
    }

    pub fn domain_spec(&self) -> DomainSpec {
        let reach = self
            .operator
            .frames
            .as_ref()
            .map(|fr| {
                fr.iter()
                    .flatten()
                    .map(|e| e[0].unsigned_abs().max(e[1].unsigned_abs()) as usize)
                    .max()
                    .unwrap_or(1)
            })
            .unwrap_or(1)
            .max(1);
        DomainSpec {
            shape: self.domain.shape,
            dim: self.domain.dim,
            extent: self.domain.extent,
            spacing: self.domain.h,
            exterior_radius: self.domain.exterior_radius,
            reach,
        }
    }

    pub fn build_domain(&self) -> Result<Arc<Domain>> {
        Domain::build(self.domain_spec())
    }

    pub fn sample(&self, domain: &Arc<Domain>, text: &str) -> Result<GridFunction> {
        let e = Expr::parse(text)?;
        GridFunction::from_fn(domain.clone(), |x| e.eval(x))
    }

    pub fn problem(&self, domain: &Arc<Domain>) -> Result<Problem> {
        Problem::new(
            self.sample(domain, &self.data.f)?,
            self.sample(domain, &self.data.g)?,
            self.operator()?,
        )
    }

    pub fn regularity_options(&self) -> RegularityOptions {
        RegularityOptions {
            rho: self.regularity.rho,
            n_scales: self.regularity.n_scales,
            r_max: self.regularity.r_max,
            sign_tol: self.regularity.sign_tol,
            theta2: self.theta2,
            alpha0: self.regularity.alpha0,
        }
    }

    /// The full configuration as INI text; [`RunConfig::parse`] inverts it.
    pub fn to_ini(&self) -> String {
        let n = |v: f64| fmt17(v);
        let on = |v: Option<f64>| v.map(fmt17).unwrap_or_else(|| "none".into());
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}\n", self.seed);
        let d = &self.domain;
        let _ = writeln!(
            s,
            "[domain]\nshape = {}\ndim = {}\nextent = {}\nh = {}\nR = {}\n",
            d.shape.name(),
            d.dim,
            n(d.extent),
            n(d.h),
            n(d.exterior_radius)
        );
        let o = &self.operator;
        let _ = writeln!(
            s,
            "[operator]\nkind = {}\nlambda = {}\nLambda = {}",
            o.kind.name(),
            n(o.lambda),
            n(o.cap)
        );
        if let OperatorKind::ConvexCombination { weight } = o.kind {
            let _ = writeln!(s, "weight = {}", n(weight));
        }
        let _ = writeln!(
            s,
            "frames = {}\n",
            o.frames.as_ref().map(|f| frames_text(f)).unwrap_or_else(|| "default".into())
        );
        let _ = writeln!(s, "[degeneracy]\ntheta1 = {}\ntheta2 = {}\n", n(self.theta1), n(self.theta2));
        let _ = writeln!(s, "[data]\nf = {}\ng = {}", self.data.f, self.data.g);
        if let Some(x) = &self.data.exact {
            let _ = writeln!(s, "exact = {x}");
        }
        let v = &self.solver;
        let _ = writeln!(
            s,
            "\n[solver]\ntol_inner = {}\ntol_fixed_point = {}\ntol_continuation = {}\ndamping = {}\npseudo_time_step = {}\nmax_inner_iters = {}\nmax_outer_iters = {}\nmax_continuation_steps = {}\nepsilon_schedule = {}\nmethod = {}\ngradient = {}\nkeep_snapshots = {}\n",
            n(v.tol_inner),
            n(v.tol_fixed_point),
            n(v.tol_continuation),
            n(v.damping),
            n(v.pseudo_time_step),
            v.max_inner_iters,
            v.max_outer_iters,
            v.max_continuation_steps,
            v.epsilon_schedule.name(),
            v.method.name(),
            v.gradient.name(),
            v.keep_snapshots
        );
        let t = &self.verification;
        let _ = writeln!(
            s,
            "[verification]\nsample_count = {}\ngradient_range = {}\nhessian_range = {}\ntol_touch = {}\ngamma = {}\nC0 = {}\npucci_tol = {}\n",
            t.touching.sample_count,
            n(t.touching.gradient_range),
            n(t.touching.hessian_range),
            on(t.touching.tol_touch),
            n(t.gamma),
            on(t.c0),
            on(t.pucci_tol)
        );
        let r = &self.regularity;
        let probes = r
            .probes
            .as_ref()
            .map(|p| {
                p.iter()
                    .map(|x| format!("{} {}", n(x[0]), n(x[1])))
                    .collect::<Vec<_>>()
                    .join("; ")
            })
            .unwrap_or_else(|| "default".into());
        let alphas = r.alphas.iter().map(|a| n(*a)).collect::<Vec<_>>().join(",");
        let _ = writeln!(
            s,
            "[regularity]\nprobes = {probes}\nrho = {}\nn_scales = {}\nr_max = {}\ntau = {}\nalphas = {alphas}\nalpha0 = {}\nsign_tol = {}\n",
            n(r.rho),
            r.n_scales,
            on(r.r_max),
            n(r.tau),
            n(r.alpha0),
            n(r.sign_tol)
        );
        let mut formats = Vec::new();
        if self.output.csv {
            formats.push("csv");
        }
        if self.output.pgm {
            formats.push("pgm");
        }
        let _ = writeln!(
            s,
            "[output]\ndirectory = {}\nformats = {}",
            self.output.directory.display(),
            formats.join(",")
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = RunConfig::parse("[degeneracy]\ntheta1 = 1\ntheta2 = 3\n").unwrap();
        assert_eq!(cfg.theta1, 1.0);
        assert_eq!(cfg.domain.shape, Shape::Interval);
        assert_eq!(cfg.domain.h, 1.0 / 64.0);
        assert_eq!(cfg.solver, SolveConfig::default());
        assert_eq!(cfg.regularity.alphas, vec![0.25]);
        assert_eq!(cfg.regularity.alpha0, 1.0);
        assert!(cfg.output.csv && cfg.output.pgm);
    }

    #[test]
    fn reversed_rates_are_rejected() {
        let err = RunConfig::parse("[degeneracy]\ntheta1 = 3\ntheta2 = 1\n").unwrap_err();
        match err {
            Error::Config { key, message } => {
                assert_eq!(key, "degeneracy.theta1");
                assert!(message.contains("0 < theta1 < theta2"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn missing_rates_and_unknown_keys_name_the_key() {
        let e = RunConfig::parse("[degeneracy]\ntheta1 = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "degeneracy.theta2"));
        let e = RunConfig::parse("[degeneracy]\ntheta1 = 1\ntheta2 = 2\nfoo = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "degeneracy.foo"));
        let e = RunConfig::parse("[nope]\n[degeneracy]\ntheta1 = 1\ntheta2 = 2\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "nope"));
        let e = RunConfig::parse("[degeneracy]\ntheta1 = 1\ntheta2 = 2\n[domain]\nh = abc\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "domain.h"));
    }

    #[test]
    fn piecewise_source_parses_to_the_two_phase_data() {
        let cfg = RunConfig::parse(
            "[degeneracy]\ntheta1 = 1\ntheta2 = 3\n[data]\nf = piecewise_sign(-1.125, 0.6103515625)\n",
        )
        .unwrap();
        let d = cfg.build_domain().unwrap();
        let f = cfg.sample(&d, &cfg.data.f).unwrap();
        let o = crate::verification::TwoPhaseOracle::new(1.0, 3.0).unwrap();
        for i in 0..d.node_count() {
            assert_eq!(f.value(i), o.source(d.coords(i)[0]));
        }
    }

    #[test]
    fn fractions_and_frames() {
        let cfg = RunConfig::parse(
            "seed = 9\n[domain]\nshape = box\nh = 1/16\n[operator]\nkind = pucci_minus\nlambda = 1\nLambda = 2\nframes = 1,0 0,1; 2,1 -1,2\n[degeneracy]\ntheta1 = 1/2\ntheta2 = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.domain.h, 0.0625);
        assert_eq!(cfg.theta1, 0.5);
        assert_eq!(cfg.domain_spec().reach, 2);
        assert_eq!(cfg.verification.touching.seed, 9);
        assert_eq!(cfg.operator().unwrap().frames[1], vec![[2, 1], [-1, 2]]);
    }

    #[test]
    fn ini_round_trip() {
        let text = "seed = 4\n[domain]\nshape = box\nh = 1/8\n[operator]\nkind = convex_combination\nweight = 0.3\nLambda = 3\n[degeneracy]\ntheta1 = 0.5\ntheta2 = 1.5\n[data]\nf = |x|^2 - 1\ng = piecewise_sign(1, -1)\nexact = x1\n[solver]\ngradient = central\nmethod = gauss_seidel\n[verification]\ntol_touch = 0.01\nC0 = 2\n[regularity]\nprobes = 0 0; 0.5 -0.25\nalphas = 0.2,0.5\nr_max = 0.5\n[output]\ndirectory = /tmp/x\nformats = csv\n";
        let cfg = RunConfig::parse(text).unwrap();
        let again = RunConfig::parse(&cfg.to_ini()).unwrap();
        assert_eq!(cfg, again);
        let with_manifest = format!("{}\n[manifest]\nstatus = ok\n", cfg.to_ini());
        assert_eq!(RunConfig::parse(&with_manifest).unwrap(), cfg);
    }
}
