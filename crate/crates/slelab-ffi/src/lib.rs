//! C ABI for slelab.
//!
//! Every fallible call returns a [`SlelabStatus`]; on failure the message is
//! kept per thread and read with [`slelab_last_error`]. Handles are opaque
//! and must be released with their `_free` function. Strings handed out by
//! the library are released with [`slelab_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use slelab::lab::{run, Experiment, Report, RunConfig};
use slelab::loewner::{extract_trace, generate_driving, DrivingOptions, Scheme, Trace};
use slelab::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlelabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidParameter = 3,
    OutOfDomain = 4,
    InvalidStart = 5,
    StepInstability = 6,
    Parse = 7,
    Io = 8,
    NoFit = 9,
    Panic = 10,
}

/// Experiment configuration.
pub struct SlelabConfig(RunConfig);

/// Finished experiment report.
pub struct SlelabReport(Report);

/// Sampled chordal SLE trace in capacity time.
pub struct SlelabTrace(Trace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SlelabStatus, msg: impl Into<String>) -> SlelabStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> SlelabStatus {
    let status = match &e {
        Error::InvalidParameter(_) => SlelabStatus::InvalidParameter,
        Error::OutOfDomain(_) => SlelabStatus::OutOfDomain,
        Error::InvalidStart(_) => SlelabStatus::InvalidStart,
        Error::StepInstability { .. } => SlelabStatus::StepInstability,
        Error::Parse(_) | Error::Json(_) => SlelabStatus::Parse,
        Error::Io(_) => SlelabStatus::Io,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning panics into [`SlelabStatus::Panic`].
fn guard(f: impl FnOnce() -> SlelabStatus) -> SlelabStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(SlelabStatus::Panic, "panic inside slelab"))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, SlelabStatus> {
    if s.is_null() {
        return Err(fail(SlelabStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|e| fail(SlelabStatus::InvalidUtf8, e.to_string()))
}

unsafe fn give_string(s: String, out: *mut *mut c_char) -> SlelabStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            SlelabStatus::Ok
        }
        Err(e) => fail(SlelabStatus::Parse, e.to_string()),
    }
}

macro_rules! nonnull {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            return fail(SlelabStatus::NullPointer, concat!("null pointer: ", stringify!($p)));
        })+
    };
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn slelab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn slelab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration for the named experiment.
///
/// # Safety
/// `experiment` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slelab_config_new(experiment: *const c_char, out: *mut *mut SlelabConfig) -> SlelabStatus {
    guard(|| {
        nonnull!(out);
        let name = match read_str(experiment) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match name.parse::<Experiment>() {
            Ok(e) => {
                *out = Box::into_raw(Box::new(SlelabConfig(RunConfig::new(e))));
                SlelabStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Parses a TOML run configuration.
///
/// # Safety
/// `toml` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slelab_config_from_toml(toml: *const c_char, out: *mut *mut SlelabConfig) -> SlelabStatus {
    guard(|| {
        nonnull!(out);
        let s = match read_str(toml) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match RunConfig::from_toml(s) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(SlelabConfig(c)));
                SlelabStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn slelab_config_set_seed(cfg: *mut SlelabConfig, seed: u64) -> SlelabStatus {
    nonnull!(cfg);
    (*cfg).0.seed = seed;
    SlelabStatus::Ok
}

/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn slelab_config_set_workers(cfg: *mut SlelabConfig, workers: usize) -> SlelabStatus {
    nonnull!(cfg);
    if workers == 0 {
        return fail(SlelabStatus::InvalidParameter, "workers must be positive");
    }
    (*cfg).0.workers = Some(workers);
    SlelabStatus::Ok
}

/// Serializes the configuration back to TOML.
///
/// # Safety
/// `cfg` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slelab_config_to_toml(cfg: *const SlelabConfig, out: *mut *mut c_char) -> SlelabStatus {
    guard(|| {
        nonnull!(cfg, out);
        match (*cfg).0.to_toml() {
            Ok(s) => give_string(s, out),
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `cfg` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn slelab_config_free(cfg: *mut SlelabConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the configured experiment to completion.
///
/// # Safety
/// `cfg` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slelab_run(cfg: *const SlelabConfig, out: *mut *mut SlelabReport) -> SlelabStatus {
    guard(|| {
        nonnull!(cfg, out);
        match run(&(*cfg).0) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(SlelabReport(r)));
                SlelabStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `report` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slelab_report_to_json(report: *const SlelabReport, out: *mut *mut c_char) -> SlelabStatus {
    guard(|| {
        nonnull!(report, out);
        match (*report).0.to_json() {
            Ok(s) => give_string(s, out),
            Err(e) => from_error(e),
        }
    })
}

/// Per-scale table with header `scale,estimate,stderr,n`.
///
/// # Safety
/// `report` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slelab_report_to_csv(report: *const SlelabReport, out: *mut *mut c_char) -> SlelabStatus {
    guard(|| {
        nonnull!(report, out);
        give_string((*report).0.to_csv(), out)
    })
}

/// Fitted exponent and its confidence interval. Returns `NoFit` when the
/// experiment refused to fit.
///
/// # Safety
/// `report` must come from this library; the outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn slelab_report_exponent(
    report: *const SlelabReport,
    exponent: *mut f64,
    ci_lo: *mut f64,
    ci_hi: *mut f64,
) -> SlelabStatus {
    nonnull!(report, exponent, ci_lo, ci_hi);
    match &(*report).0.fit {
        Some(f) => {
            *exponent = f.exponent;
            *ci_lo = f.ci_lo;
            *ci_hi = f.ci_hi;
            SlelabStatus::Ok
        }
        None => fail(SlelabStatus::NoFit, (*report).0.notes.join("; ")),
    }
}

/// # Safety
/// `report` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn slelab_report_free(report: *mut SlelabReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Chordal SLE_κ trace in H from 0 up to capacity time `horizon`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slelab_sle_trace(
    kappa: f64,
    dt: f64,
    horizon: f64,
    seed: u64,
    out: *mut *mut SlelabTrace,
) -> SlelabStatus {
    guard(|| {
        nonnull!(out);
        let tr = generate_driving(Scheme::Sle, kappa, &[], dt, horizon, seed, &DrivingOptions::default())
            .and_then(|d| extract_trace(&d));
        match tr {
            Ok(t) => {
                *out = Box::into_raw(Box::new(SlelabTrace(t)));
                SlelabStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of points in the trace, 0 for null.
///
/// # Safety
/// `trace` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn slelab_trace_len(trace: *const SlelabTrace) -> usize {
    if trace.is_null() {
        0
    } else {
        (*trace).0.len()
    }
}

/// Copies up to `cap` points into `t`, `re` and `im`; `written` receives the
/// number copied.
///
/// # Safety
/// `trace` must come from this library; each array must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn slelab_trace_copy(
    trace: *const SlelabTrace,
    t: *mut f64,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
    written: *mut usize,
) -> SlelabStatus {
    nonnull!(trace, t, re, im, written);
    let tr = &(*trace).0;
    let n = tr.len().min(cap);
    for k in 0..n {
        *t.add(k) = tr.times[k];
        *re.add(k) = tr.points[k].re;
        *im.add(k) = tr.points[k].im;
    }
    *written = n;
    SlelabStatus::Ok
}

/// # Safety
/// `trace` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn slelab_trace_free(trace: *mut SlelabTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// # Safety
/// `s` must be a string returned by this library or null.
#[no_mangle]
pub unsafe extern "C" fn slelab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
