//! C ABI over the solver, the viscosity checks and the regularity probes.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free` function. Every fallible call returns an
//! [`FtStatus`]; on failure the message is kept per thread and can be
//! copied out with [`ft_last_error_message`]. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use freetrans::cli::{exit_code, ExitCode, RunConfig};
use freetrans::grid::GridFunction;
use freetrans::regularity::{estimate_gradient_holder_within, predicted_exponent};
use freetrans::solver::continuation;
use freetrans::verification::{large_gradient_pucci_check, touch_test_subsolution, touch_test_supersolution};
use freetrans::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtStatus {
    Ok = 0,
    NullArgument = 1,
    Config = 3,
    Io = 4,
    NonConvergence = 5,
    Numerical = 6,
    VerificationFailed = 7,
    ShapeMismatch = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// A validated run configuration.
pub struct FtConfig {
    inner: RunConfig,
}

/// A grid solution together with its domain.
pub struct FtSolution {
    u: GridFunction,
    epsilon: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FtVerifyResult {
    pub c0: f64,
    pub sub_evaluations: usize,
    pub sub_failures: usize,
    pub sub_worst_margin: f64,
    pub super_evaluations: usize,
    pub super_failures: usize,
    pub super_worst_margin: f64,
    pub gradient_nodes: usize,
    pub gradient_violations: usize,
    /// 1 when every check passed.
    pub passed: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FtHolderResult {
    pub slope: f64,
    /// `slope - 1`; NaN unless `reliable` is 1.
    pub alpha_hat: f64,
    pub residual: f64,
    pub smooth: i32,
    pub reliable: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> FtStatus {
    match exit_code(e) {
        ExitCode::Config | ExitCode::Usage => FtStatus::Config,
        ExitCode::Io => FtStatus::Io,
        ExitCode::NonConvergence => FtStatus::NonConvergence,
        ExitCode::Numerical => FtStatus::Numerical,
        ExitCode::VerificationFailed => FtStatus::VerificationFailed,
        ExitCode::ShapeMismatch => FtStatus::ShapeMismatch,
        ExitCode::Ok => FtStatus::Ok,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (FtStatus, String)>) -> FtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FtStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FtStatus::Panic
        }
    }
}

fn lift(e: Error) -> (FtStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FtStatus, String) {
    (FtStatus::NullArgument, format!("{what} is null"))
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (FtStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (FtStatus::Config, format!("{what} is not UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ft_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message (NUL-terminated, possibly
/// truncated) into `buf` and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ft_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses INI text into a configuration handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_config_from_str(text: *const c_char, out: *mut *mut FtConfig) -> FtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(text, "text")?;
        let inner = RunConfig::parse(text).map_err(lift)?;
        *out = Box::into_raw(Box::new(FtConfig { inner }));
        Ok(())
    })
}

/// Reads a configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_config_from_file(path: *const c_char, out: *mut *mut FtConfig) -> FtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = read_str(path, "path")?;
        let inner = RunConfig::from_file(Path::new(path)).map_err(lift)?;
        *out = Box::into_raw(Box::new(FtConfig { inner }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle from `ft_config_from_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ft_config_free(cfg: *mut FtConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn ft_config_set_seed(cfg: *mut FtConfig, seed: u64) -> FtStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        cfg.inner.set_seed(seed);
        Ok(())
    })
}

/// Runs the ε-continuation for the configured problem.
///
/// # Safety
/// `cfg` must be a live configuration handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_solve(cfg: *const FtConfig, out: *mut *mut FtSolution) -> FtStatus {
    guard(|| {
        let cfg = &cfg.as_ref().ok_or_else(|| null("cfg"))?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        let domain = cfg.build_domain().map_err(lift)?;
        let problem = cfg.problem(&domain).map_err(lift)?;
        let res = continuation(&problem, cfg.theta1, cfg.theta2, &cfg.solver).map_err(lift)?;
        *out = Box::into_raw(Box::new(FtSolution {
            u: res.u,
            epsilon: res.epsilon,
        }));
        Ok(())
    })
}

/// Builds a solution handle from nodal values on the configured grid.
///
/// # Safety
/// `values` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn ft_solution_from_values(
    cfg: *const FtConfig,
    values: *const f64,
    len: usize,
    out: *mut *mut FtSolution,
) -> FtStatus {
    guard(|| {
        let cfg = &cfg.as_ref().ok_or_else(|| null("cfg"))?.inner;
        if values.is_null() {
            return Err(null("values"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let domain = cfg.build_domain().map_err(lift)?;
        let data = std::slice::from_raw_parts(values, len).to_vec();
        let u = GridFunction::new(domain, data).map_err(lift)?;
        *out = Box::into_raw(Box::new(FtSolution { u, epsilon: f64::NAN }));
        Ok(())
    })
}

/// # Safety
/// `sol` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn ft_solution_free(sol: *mut FtSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Number of grid nodes, 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn ft_solution_len(sol: *const FtSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.u.values().len())
}

/// Spatial dimension, 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn ft_solution_dim(sol: *const FtSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.u.domain().dim())
}

/// Final regularization level, NaN when the values were supplied directly.
///
/// # Safety
/// `sol` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn ft_solution_epsilon(sol: *const FtSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.epsilon)
}

/// Copies the nodal values; `len` must be at least `ft_solution_len`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ft_solution_values(sol: *const FtSolution, out: *mut f64, len: usize) -> FtStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = sol.u.values();
        if len < v.len() {
            return Err((FtStatus::BufferTooSmall, format!("need {} values, buffer holds {len}", v.len())));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
        Ok(())
    })
}

/// Copies node coordinates, `dim` per node in node order; `len` must be at
/// least `dim * ft_solution_len`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ft_solution_coords(sol: *const FtSolution, out: *mut f64, len: usize) -> FtStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let domain = sol.u.domain();
        let dim = domain.dim();
        let need = dim * domain.node_count();
        if len < need {
            return Err((FtStatus::BufferTooSmall, format!("need {need} coordinates, buffer holds {len}")));
        }
        let out = std::slice::from_raw_parts_mut(out, need);
        for i in 0..domain.node_count() {
            out[i * dim..(i + 1) * dim].copy_from_slice(&domain.coords(i)[..dim]);
        }
        Ok(())
    })
}

/// Both touching tests and the large-gradient check with the configured
/// settings. Returns `FT_STATUS_VERIFICATION_FAILED` (with `out` filled)
/// when a check fails.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ft_verify(cfg: *const FtConfig, sol: *const FtSolution, out: *mut FtVerifyResult) -> FtStatus {
    guard(|| {
        let cfg = &cfg.as_ref().ok_or_else(|| null("cfg"))?.inner;
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let domain = cfg.build_domain().map_err(lift)?;
        if domain.node_count() != sol.u.values().len() || domain.h() != sol.u.domain().h() {
            return Err((FtStatus::ShapeMismatch, "solution does not live on the configured grid".into()));
        }
        let u = GridFunction::new(domain.clone(), sol.u.values().to_vec()).map_err(lift)?;
        let op = cfg.operator().map_err(lift)?;
        let c0 = match cfg.verification.c0 {
            Some(c) => c,
            None => cfg.sample(&domain, &cfg.data.f).map_err(lift)?.sup_norm(),
        };
        let t = &cfg.verification.touching;
        let sub = touch_test_subsolution(&u, c0, cfg.theta2, &op, t).map_err(lift)?;
        let sup = touch_test_supersolution(&u, c0, cfg.theta2, &op, t).map_err(lift)?;
        let tol = cfg.verification.pucci_tol.unwrap_or_else(|| t.tolerance(domain.h()));
        let pucci = large_gradient_pucci_check(&u, cfg.verification.gamma, c0, op.lambda, op.cap, tol).map_err(lift)?;
        let passed = sub.passed() && sup.passed() && pucci.passed();
        *out = FtVerifyResult {
            c0,
            sub_evaluations: sub.records.len(),
            sub_failures: sub.failures(),
            sub_worst_margin: sub.worst_margin(),
            super_evaluations: sup.records.len(),
            super_failures: sup.failures(),
            super_worst_margin: sup.worst_margin(),
            gradient_nodes: pucci.checked,
            gradient_violations: pucci.violations.len(),
            passed: passed as i32,
        };
        if passed {
            Ok(())
        } else {
            Err((FtStatus::VerificationFailed, "a viscosity check failed".into()))
        }
    })
}

/// Hölder exponent of the gradient at `(x1, x2)` from affine errors at radii
/// `r_max·ρ^k`, `k = 0..=n_scales`.
///
/// # Safety
/// `sol` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ft_holder_exponent(
    sol: *const FtSolution,
    x1: f64,
    x2: f64,
    r_max: f64,
    rho: f64,
    n_scales: usize,
    out: *mut FtHolderResult,
) -> FtStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let est = estimate_gradient_holder_within(&sol.u, &[x1, x2], r_max, rho, n_scales).map_err(lift)?;
        let alpha = est.alpha_hat();
        *out = FtHolderResult {
            slope: est.slope,
            alpha_hat: alpha.unwrap_or(f64::NAN),
            residual: est.residual,
            smooth: est.smooth as i32,
            reliable: alpha.is_some() as i32,
        };
        Ok(())
    })
}

/// `min(α₀, 1/(1+θ₂))`; `supremum` is set to 1 when the bound is not attained.
///
/// # Safety
/// `value` and `supremum` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ft_predicted_exponent(theta2: f64, alpha0: f64, value: *mut f64, supremum: *mut i32) -> FtStatus {
    guard(|| {
        if value.is_null() || supremum.is_null() {
            return Err(null("output pointer"));
        }
        let p = predicted_exponent(theta2, alpha0).map_err(lift)?;
        *value = p.value;
        *supremum = p.supremum as i32;
        Ok(())
    })
}
