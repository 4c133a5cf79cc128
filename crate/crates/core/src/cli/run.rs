use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use super::config::RunConfig;
use super::expr::Expr;
use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};
use crate::io::{fmt17, read_grid_csv, write_grid_csv, write_pgm, write_text};
use crate::regularity::{analyze_regularity, c1alpha_certificate};
use crate::solver::{build_barrier_sub, build_barrier_super, continuation, BarrierOptions, SolveDiagnostics};
use crate::verification::{
    large_gradient_pucci_check, touch_test_subsolution, touch_test_supersolution, OnePhaseOracle, TwoPhaseOracle,
};

/// Process exit codes. The set is closed; only `Ok` is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Usage = 2,
    Config = 3,
    Io = 4,
    NonConvergence = 5,
    Numerical = 6,
    VerificationFailed = 7,
    ShapeMismatch = 8,
}

pub fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Config { .. } | Error::Parse(_) => ExitCode::Config,
        Error::Io { .. } | Error::Csv(_) => ExitCode::Io,
        Error::NonConvergence { .. } => ExitCode::NonConvergence,
        Error::NumericalFailure(_) | Error::Resolution(_) | Error::Stencil { .. } | Error::Ellipticity(_) => {
            ExitCode::Numerical
        }
        Error::ComparisonViolation(_) => ExitCode::VerificationFailed,
        Error::ShapeMismatch(_) => ExitCode::ShapeMismatch,
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: ExitCode,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn new(cfg: &RunConfig) -> Result<Self> {
        let dir = cfg.output.directory.clone();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Artifacts { dir, written: Vec::new() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        write_text(&p, text)?;
        self.written.push(p);
        Ok(())
    }

    fn grid(&mut self, cfg: &RunConfig, stem: &str, u: &GridFunction, column: &str) -> Result<()> {
        if cfg.output.csv {
            let p = self.path(&format!("{stem}.csv"));
            write_grid_csv(u, &p, column)?;
            self.written.push(p);
        }
        if cfg.output.pgm && u.domain().dim() == 2 {
            let p = self.path(&format!("{stem}.pgm"));
            write_pgm(u, &p)?;
            self.written.push(p);
        }
        Ok(())
    }

    fn finish(self, code: ExitCode, summary: String) -> Outcome {
        Outcome {
            code,
            summary,
            artifacts: self.written,
        }
    }
}

fn manifest(cfg: &RunConfig, entries: &[(&str, String)]) -> String {
    let mut s = cfg.to_ini();
    let _ = writeln!(s, "\n[manifest]\nversion = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "seed = {}", cfg.seed);
    for (k, v) in entries {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

/// Runs the ε-continuation. Diagnostics and the manifest are written even
/// when the solve fails.
pub fn run_solve(cfg: &RunConfig) -> Result<Outcome> {
    let domain = cfg.build_domain()?;
    let problem = cfg.problem(&domain)?;
    let mut out = Artifacts::new(cfg)?;
    let start = Instant::now();
    let result = continuation(&problem, cfg.theta1, cfg.theta2, &cfg.solver);
    let wall = start.elapsed().as_secs_f64();

    let mut entries = vec![("wall_time_seconds", fmt17(wall))];
    let (code, diagnostics, summary) = match result {
        Ok(res) => {
            out.grid(cfg, "solution", &res.u, "u")?;
            entries.push(("status", "converged".into()));
            entries.push(("epsilon", fmt17(res.epsilon)));
            entries.push(("cauchy", res.diagnostics.cauchy.to_string()));
            let mut summary = format!(
                "solve converged at epsilon {} in {:.3} s\n",
                fmt17(res.epsilon),
                wall
            );
            if let Some(exact) = &cfg.data.exact {
                let e = Expr::parse(exact)?;
                let err = (0..domain.node_count())
                    .map(|i| (res.u.value(i) - e.eval(domain.coords(i))).abs())
                    .fold(0.0, f64::max);
                entries.push(("sup_error", fmt17(err)));
                let _ = writeln!(summary, "sup-error vs exact solution {}", fmt17(err));
            }
            for w in &res.diagnostics.warnings {
                let _ = writeln!(summary, "warning: {w}");
            }
            (ExitCode::Ok, res.diagnostics, summary)
        }
        Err(Error::NonConvergence {
            phase,
            iterations,
            last,
            diagnostics,
        }) => {
            entries.push(("status", "non_convergence".into()));
            entries.push(("failed_phase", phase.to_string()));
            entries.push(("iterations", iterations.to_string()));
            entries.push(("last_change", fmt17(last)));
            let summary = format!("{phase} did not converge after {iterations} iterations\n");
            (ExitCode::NonConvergence, *diagnostics, summary)
        }
        Err(e) => {
            entries.push(("status", "error".into()));
            entries.push(("error", e.to_string().replace('\n', " ")));
            let code = exit_code(&e);
            (code, SolveDiagnostics::default(), format!("solve failed: {e}\n"))
        }
    };
    out.text("diagnostics.csv", &diagnostics.to_csv())?;
    out.text("manifest.ini", &manifest(cfg, &entries))?;
    Ok(out.finish(code, summary))
}

fn load_solution(domain: &Arc<Domain>, path: &Path) -> Result<GridFunction> {
    read_grid_csv(path, domain)
}

fn source_bound(cfg: &RunConfig, domain: &Arc<Domain>) -> Result<f64> {
    match cfg.verification.c0 {
        Some(c) => Ok(c),
        None => Ok(cfg.sample(domain, &cfg.data.f)?.sup_norm()),
    }
}

/// Touching tests on both sides and the large-gradient check; exit 0 only
/// when every evaluation passes.
pub fn run_verify(cfg: &RunConfig, solution: &Path) -> Result<Outcome> {
    let domain = cfg.build_domain()?;
    let u = load_solution(&domain, solution)?;
    let op = cfg.operator()?;
    let c0 = source_bound(cfg, &domain)?;
    let touching = &cfg.verification.touching;
    let sub = touch_test_subsolution(&u, c0, cfg.theta2, &op, touching)?;
    let sup = touch_test_supersolution(&u, c0, cfg.theta2, &op, touching)?;
    let tol = cfg.verification.pucci_tol.unwrap_or_else(|| touching.tolerance(domain.h()));
    let pucci = large_gradient_pucci_check(&u, cfg.verification.gamma, c0, op.lambda, op.cap, tol)?;

    let mut out = Artifacts::new(cfg)?;
    out.text("touching_sub.csv", &sub.to_csv())?;
    out.text("touching_super.csv", &sup.to_csv())?;
    out.text("pucci_violations.csv", &pucci.to_csv())?;
    let mut witnesses = String::from("side,sample,node,value,margin\n");
    for r in sub.witnesses().chain(sup.witnesses()) {
        let side = if sub.records.contains(r) { "subsolution" } else { "supersolution" };
        let _ = writeln!(witnesses, "{side},{},{},{},{}", r.sample, r.node, fmt17(r.value), fmt17(r.margin));
    }
    out.text("witnesses.csv", &witnesses)?;
    let summary = format!(
        "C0 = {}\n{}\n{}\nlarge-gradient check: {} nodes above gamma {}, {} violations\n",
        fmt17(c0),
        sub.summary(),
        sup.summary(),
        pucci.checked,
        fmt17(pucci.gamma),
        pucci.violations.len()
    );
    out.text("verify_summary.txt", &summary)?;
    let passed = sub.passed() && sup.passed() && pucci.passed();
    let code = if passed { ExitCode::Ok } else { ExitCode::VerificationFailed };
    Ok(out.finish(code, summary))
}

/// Measurement only: exits 0 unless reading or writing fails.
pub fn run_regularity(cfg: &RunConfig, solution: &Path) -> Result<Outcome> {
    let domain = cfg.build_domain()?;
    let u = load_solution(&domain, solution)?;
    let c0 = source_bound(cfg, &domain)?;
    let report = analyze_regularity(&u, cfg.regularity.probes.as_deref(), &cfg.regularity_options())?;
    let mut certificates = String::from("alpha,tau,seminorm,normalizer,ratio,pairs\n");
    for &alpha in &cfg.regularity.alphas {
        let c = c1alpha_certificate(&u, cfg.regularity.tau, alpha, c0, cfg.theta2)?;
        let _ = writeln!(
            certificates,
            "{},{},{},{},{},{}",
            fmt17(alpha),
            fmt17(cfg.regularity.tau),
            fmt17(c.seminorm),
            fmt17(c.normalizer),
            fmt17(c.ratio),
            c.pairs
        );
    }
    let mut out = Artifacts::new(cfg)?;
    out.text("regularity.csv", &report.to_csv())?;
    out.text("certificates.csv", &certificates)?;
    let summary = report.summary();
    out.text("regularity_summary.txt", &summary)?;
    Ok(out.finish(ExitCode::Ok, summary))
}

fn columns_csv(domain: &Domain, columns: &[(&str, &GridFunction)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head: Vec<String> = (1..=domain.dim()).map(|k| format!("x{k}")).collect();
    head.extend(columns.iter().map(|(n, _)| n.to_string()));
    w.write_record(&head)?;
    for i in 0..domain.node_count() {
        let mut row: Vec<String> = domain.coords(i).iter().map(|&c| fmt17(c)).collect();
        row.extend(columns.iter().map(|(_, g)| fmt17(g.value(i))));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// One-phase oracle when the rates coincide, two-phase otherwise.
pub fn run_oracle(cfg: &RunConfig) -> Result<Outcome> {
    let domain = cfg.build_domain()?;
    let (u, f, description) = if cfg.theta1 == cfg.theta2 {
        let o = OnePhaseOracle::new(cfg.theta1, domain.dim())?;
        let (u, f) = o.sample(&domain)?;
        let d = format!(
            "kind = one_phase\ntheta = {}\nalpha = {}\nu = |x|^(1+alpha)\nf = {}\n",
            fmt17(o.theta),
            fmt17(o.alpha),
            fmt17(o.source)
        );
        (u, f, d)
    } else {
        let o = TwoPhaseOracle::new(cfg.theta1, cfg.theta2)?;
        let (u, f) = o.sample(&domain)?;
        let d = format!(
            "kind = two_phase\ntheta1 = {}\ntheta2 = {}\nalpha1 = {}\nalpha2 = {}\nu = x^(1+alpha1) for x >= 0, -|x|^(1+alpha2) for x < 0\nf_plus = {}\nf_minus = {}\n",
            fmt17(o.theta1),
            fmt17(o.theta2),
            fmt17(o.alpha1),
            fmt17(o.alpha2),
            fmt17(o.source_plus),
            fmt17(o.source_minus)
        );
        (u, f, d)
    };
    let mut out = Artifacts::new(cfg)?;
    out.text("oracle.csv", &columns_csv(&domain, &[("u", &u), ("f", &f)])?)?;
    out.text("oracle.txt", &description)?;
    Ok(out.finish(ExitCode::Ok, description))
}

/// Barrier pair for the configured data.
pub fn run_barriers(cfg: &RunConfig) -> Result<Outcome> {
    let domain = cfg.build_domain()?;
    let problem = cfg.problem(&domain)?;
    let options = BarrierOptions {
        exterior_radius: Some(cfg.domain.exterior_radius),
        ..BarrierOptions::default()
    };
    let (upper, spec_upper) = build_barrier_super(&problem.g, &problem.f, &problem.op, &options)?;
    let (lower, spec_lower) = build_barrier_sub(&problem.g, &problem.f, &problem.op, &options)?;
    let mut out = Artifacts::new(cfg)?;
    out.grid(cfg, "barrier_super", &upper, "w")?;
    out.grid(cfg, "barrier_sub", &lower, "w")?;
    let text = format!(
        "[super]\n{}\n[sub]\n{}",
        spec_upper.to_manifest(),
        spec_lower.to_manifest()
    );
    out.text("barrier_spec.ini", &text)?;
    Ok(out.finish(ExitCode::Ok, text))
}
