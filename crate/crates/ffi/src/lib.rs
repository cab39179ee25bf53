//! C ABI for `levy-breakdrift`.
//!
//! Models are opaque handles created by `lb_model_*` and released with
//! [`lb_model_free`]. Every other entry point returns an [`LbStatus`] and
//! writes its results through out-pointers; on failure the message is
//! available from [`lb_last_error_message`] on the same thread.
//!
//! Horizons are passed as a `double`: a positive finite value is a finite
//! horizon and `INFINITY` means no horizon.

use levy_breakdrift::cli::{run, JobSpec};
use levy_breakdrift::laplace::{laplace_sup_broken, laplace_sup_exp_t, LaplaceQuery, RandomHorizonSpec};
use levy_breakdrift::montecarlo::{self as mc, McConfig, SupScheme};
use levy_breakdrift::ruin::{ruin_report, TwoCompanyParams};
use levy_breakdrift::supdist::{sup_broken_sn, sup_broken_sp, sup_linear_sn, sup_linear_sp, sup_linear_sp_inf};
use levy_breakdrift::{BrokenDrift, Error, Horizon, LevyModel, QuadConfig};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid parameters, unsupported regime or malformed job.
    Domain = 2,
    /// Quadrature, truncation or inversion did not reach the tolerance.
    Convergence = 3,
    Panic = 4,
}

/// Opaque model handle.
pub struct LbModel(LevyModel);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbSide {
    /// Spectrally positive theorems.
    Sp = 0,
    /// Spectrally negative theorems.
    Sn = 1,
}

/// Quadrature tolerances. Pass a null pointer for the defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LbQuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LbEstimate {
    pub value: f64,
    pub err_est: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LbSupResult {
    pub probability: f64,
    pub a_term: f64,
    pub b_term: f64,
    pub err_est: f64,
}

/// Ruin probabilities; `crossing` is NaN when the ruin lines do not cross.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LbRuinReport {
    pub u1: f64,
    pub u2: f64,
    pub c1: f64,
    pub c2: f64,
    pub crossing: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub psi_or: f64,
    pub psi_sim: f64,
    pub psi_and: f64,
    pub psi_and_raw: f64,
}

/// Extra time after an exponential break in Laplace calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbVKind {
    None = 0,
    Infinite = 1,
    /// Exponential with rate `theta`.
    Exponential = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbScheme {
    Grid = 0,
    StickBreaking = 1,
}

/// Monte Carlo settings; `grid_step <= 0` picks the default step.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LbMcConfig {
    pub n_paths: u64,
    pub grid_step: f64,
    pub seed: u64,
    pub antithetic: bool,
    pub scheme: LbScheme,
    pub max_work: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LbMcEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: u64,
    /// True when grid discretization biases the estimate downward.
    pub grid_bias_downward: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LbStatus {
    if e.exit_code() == 3 {
        LbStatus::Convergence
    } else {
        LbStatus::Domain
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> LbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LbStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            LbStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned());
            set_error(format!("panic: {}", msg.unwrap_or_default()));
            LbStatus::Panic
        }
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
    Status(LbStatus, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn quad(cfg: *const LbQuadConfig) -> QuadConfig {
    match cfg.as_ref() {
        None => QuadConfig::default(),
        Some(c) => {
            let mut q = QuadConfig::default().with_tolerance(c.abs_tol, c.rel_tol);
            q.max_subdivisions = c.max_subdivisions;
            q
        }
    }
}

fn horizon(h: f64) -> Horizon {
    if h == f64::INFINITY {
        Horizon::Infinite
    } else {
        Horizon::Finite { s: h }
    }
}

fn new_model(m: levy_breakdrift::Result<LevyModel>, out: *mut *mut LbModel) -> LbStatus {
    guard(|| unsafe {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let m = m?;
        out.write(Box::into_raw(Box::new(LbModel(m))));
        Ok(())
    })
}

/// Standard Brownian motion.
#[no_mangle]
pub extern "C" fn lb_model_brownian(out: *mut *mut LbModel) -> LbStatus {
    new_model(Ok(LevyModel::brownian()), out)
}

/// Gamma process, `X(t) ~ Gamma(shape t, rate delta)`.
#[no_mangle]
pub extern "C" fn lb_model_gamma(delta: f64, out: *mut *mut LbModel) -> LbStatus {
    new_model(LevyModel::gamma(delta), out)
}

/// Totally skewed, zero-mean alpha-stable process, `1 < alpha < 2`.
#[no_mangle]
pub extern "C" fn lb_model_stable(alpha: f64, out: *mut *mut LbModel) -> LbStatus {
    new_model(LevyModel::stable(alpha), out)
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must come from an `lb_model_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lb_model_free(model: *mut LbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// The default quadrature settings.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lb_quad_config_default(out: *mut LbQuadConfig) -> LbStatus {
    guard(|| {
        let q = QuadConfig::default();
        write(out, LbQuadConfig { abs_tol: q.abs_tol, rel_tol: q.rel_tol, max_subdivisions: q.max_subdivisions }, "out")
    })
}

/// The default Monte Carlo settings.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lb_mc_config_default(out: *mut LbMcConfig) -> LbStatus {
    guard(|| {
        let c = McConfig::default();
        let v = LbMcConfig {
            n_paths: c.n_paths,
            grid_step: c.grid_step.unwrap_or(0.0),
            seed: c.seed,
            antithetic: c.antithetic,
            scheme: LbScheme::Grid,
            max_work: c.max_work,
        };
        write(out, v, "out")
    })
}

/// Density of `X(t)` at `x`.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn lb_density(model: *const LbModel, x: f64, t: f64, out: *mut f64) -> LbStatus {
    guard(|| {
        let m = deref(model, "model")?;
        write(out, m.0.density(x, t)?, "out")
    })
}

/// `P(sup_{t < horizon} (X(t) - c t) > u)`.
///
/// # Safety
/// Pointers must be valid or null (`cfg` may be null).
#[no_mangle]
pub unsafe extern "C" fn lb_sup_linear(
    model: *const LbModel,
    c: f64,
    u: f64,
    horizon_: f64,
    side: LbSide,
    cfg: *const LbQuadConfig,
    out: *mut LbEstimate,
) -> LbStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        let q = quad(cfg);
        let e = match (side, horizon(horizon_)) {
            (LbSide::Sp, Horizon::Finite { s }) => sup_linear_sp(m, c, u, s, &q)?,
            (LbSide::Sp, Horizon::Infinite) => sup_linear_sp_inf(m, c, u, &q)?,
            (LbSide::Sn, Horizon::Finite { s }) => sup_linear_sn(m, c, u, s, &q)?,
            (LbSide::Sn, h) => {
                let r = sup_broken_sn(m, &BrokenDrift::new(c, c, 1.0)?, u, &h, &q)?;
                levy_breakdrift::Estimate::new(r.probability, r.err_est)
            }
        };
        write(out, LbEstimate { value: e.value, err_est: e.err_est }, "out")
    })
}

/// Supremum over the broken line `u + c1 t` (`t < t_break`), `u + c1 t_break + c2 (t - t_break)`.
///
/// # Safety
/// Pointers must be valid or null (`cfg` may be null).
#[no_mangle]
pub unsafe extern "C" fn lb_sup_broken(
    model: *const LbModel,
    c1: f64,
    c2: f64,
    t_break: f64,
    u: f64,
    horizon_: f64,
    side: LbSide,
    cfg: *const LbQuadConfig,
    out: *mut LbSupResult,
) -> LbStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        let d = BrokenDrift::new(c1, c2, t_break)?;
        let h = horizon(horizon_);
        let q = quad(cfg);
        let r = match side {
            LbSide::Sp => sup_broken_sp(m, &d, u, &h, &q)?,
            LbSide::Sn => sup_broken_sn(m, &d, u, &h, &q)?,
        };
        write(out, LbSupResult { probability: r.probability, a_term: r.a_term, b_term: r.b_term, err_est: r.err_est }, "out")
    })
}

/// Laplace transform of the supremum with an `Exp(lambda)` break time.
/// With `LB_V_KIND_NONE` the supremum stops at the break and `c2`, `theta`
/// are ignored.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn lb_laplace_broken(
    model: *const LbModel,
    c1: f64,
    c2: f64,
    lambda: f64,
    gamma: f64,
    v: LbVKind,
    theta: f64,
    out: *mut f64,
) -> LbStatus {
    guard(|| {
        let m = deref(model, "model")?.0;
        let q = LaplaceQuery { model: m, c1, c2, lambda, gamma };
        let value = match v {
            LbVKind::None => laplace_sup_exp_t(&m, c1, gamma, lambda)?,
            LbVKind::Infinite => laplace_sup_broken(&q, &RandomHorizonSpec::Infinite)?,
            LbVKind::Exponential => laplace_sup_broken(&q, &RandomHorizonSpec::Exponential { theta })?,
        };
        write(out, value, "out")
    })
}

/// Two-company ruin probabilities for claims `X` split as `delta1`, `delta2`.
///
/// # Safety
/// Pointers must be valid or null (`cfg` may be null).
#[no_mangle]
pub unsafe extern "C" fn lb_ruin(
    model: *const LbModel,
    x1: f64,
    x2: f64,
    p1: f64,
    p2: f64,
    delta1: f64,
    delta2: f64,
    horizon_: f64,
    cfg: *const LbQuadConfig,
    out: *mut LbRuinReport,
) -> LbStatus {
    guard(|| {
        let model = deref(model, "model")?.0;
        let params = TwoCompanyParams { x1, x2, p1, p2, delta1, delta2, model };
        let r = ruin_report(&params, &horizon(horizon_), &quad(cfg))?;
        let v = LbRuinReport {
            u1: r.reduced.u1,
            u2: r.reduced.u2,
            c1: r.reduced.c1,
            c2: r.reduced.c2,
            crossing: r.reduced.crossing.unwrap_or(f64::NAN),
            psi1: r.psi1,
            psi2: r.psi2,
            psi_or: r.psi_or,
            psi_sim: r.psi_sim,
            psi_and: r.psi_and,
            psi_and_raw: r.psi_and_raw,
        };
        write(out, v, "out")
    })
}

unsafe fn mc_config(cfg: *const LbMcConfig) -> Result<McConfig, Failure> {
    let c = deref(cfg, "cfg")?;
    Ok(McConfig {
        n_paths: c.n_paths,
        grid_step: (c.grid_step > 0.0).then_some(c.grid_step),
        seed: c.seed,
        antithetic: c.antithetic,
        scheme: match c.scheme {
            LbScheme::Grid => SupScheme::Grid,
            LbScheme::StickBreaking => SupScheme::StickBreaking,
        },
        max_work: c.max_work,
    })
}

fn mc_out(e: mc::McEstimate) -> LbMcEstimate {
    LbMcEstimate {
        estimate: e.estimate,
        std_error: e.stderr,
        n_paths: e.n_paths,
        grid_bias_downward: e.bias_note == mc::BiasNote::GridSupDownward,
    }
}

/// Monte Carlo estimate of the broken-drift supremum probability.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn lb_mc_sup_broken(
    model: *const LbModel,
    c1: f64,
    c2: f64,
    t_break: f64,
    u: f64,
    horizon_: f64,
    cfg: *const LbMcConfig,
    out: *mut LbMcEstimate,
) -> LbStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        let d = BrokenDrift::new(c1, c2, t_break)?;
        let e = mc::simulate_sup_broken(m, &d, u, &horizon(horizon_), &mc_config(cfg)?)?;
        write(out, mc_out(e), "out")
    })
}

/// Monte Carlo estimate of `P(sup_{t < horizon} (X(t) - c t) > u)`.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn lb_mc_sup_linear(
    model: *const LbModel,
    c: f64,
    u: f64,
    horizon_: f64,
    cfg: *const LbMcConfig,
    out: *mut LbMcEstimate,
) -> LbStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        let e = mc::simulate_sup_linear(m, c, u, &horizon(horizon_), &mc_config(cfg)?)?;
        write(out, mc_out(e), "out")
    })
}

/// Runs a JSON job (the format of the command-line tool) and returns its
/// JSON Lines records in `*out`, to be released with [`lb_string_free`].
///
/// # Safety
/// `job_json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lb_run_job_json(job_json: *const c_char, out: *mut *mut c_char) -> LbStatus {
    guard(|| {
        if job_json.is_null() {
            return Err(Failure::Null("job_json"));
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        out.write(ptr::null_mut());
        let text = CStr::from_ptr(job_json).to_str().map_err(|e| Error::Job(format!("job is not UTF-8: {e}")))?;
        let spec = JobSpec::from_json(text)?;
        let (mut records, mut diag) = (Vec::new(), Vec::new());
        let code = run(&spec, &mut records, &mut diag);
        let records = CString::new(records).map_err(|e| Error::Job(e.to_string()))?;
        out.write(records.into_raw());
        match code {
            0 => Ok(()),
            _ => {
                let msg = String::from_utf8_lossy(&diag).lines().filter(|l| l.starts_with("error")).collect::<Vec<_>>().join("; ");
                Err(Failure::Status(if code == 3 { LbStatus::Convergence } else { LbStatus::Domain }, msg))
            }
        }
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn lb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
