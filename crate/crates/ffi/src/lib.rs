//! C ABI over the `tropskel` pipeline.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `_free` function. Every fallible call returns a [`TropskelStatus`];
//! on failure a message is available from [`tropskel_last_error`] on the same
//! thread until the next failing call. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tropskel::config::RunConfig;
use tropskel::report::RunReport;
use tropskel::{Subcommand, TropskelError};

/// Result codes. `Ok` is zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TropskelStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    InvalidInput = 4,
    StageFailed = 5,
    OutOfRange = 6,
    Io = 7,
    Panic = 8,
}

/// A validated run configuration.
pub struct TropskelConfig(RunConfig);

/// The report of one pipeline run.
pub struct TropskelReport {
    report: RunReport,
    // Lazily built C strings handed out by the accessors; they live as long
    // as the report.
    json: Option<CString>,
    names: Vec<Option<CString>>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &TropskelError) -> TropskelStatus {
    match e {
        TropskelError::Config(_) => TropskelStatus::InvalidConfig,
        TropskelError::Input { .. } => TropskelStatus::InvalidInput,
        TropskelError::Stage { .. } => TropskelStatus::StageFailed,
        TropskelError::Plot(_) | TropskelError::Io(_) => TropskelStatus::Io,
    }
}

/// Runs `f`, turning panics into `Panic` and recording error messages.
fn guard(f: impl FnOnce() -> Result<(), (TropskelStatus, String)>) -> TropskelStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TropskelStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            TropskelStatus::Panic
        }
    }
}

fn null(what: &str) -> (TropskelStatus, String) {
    (TropskelStatus::NullArgument, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (TropskelStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| (TropskelStatus::InvalidUtf8, format!("{what}: {e}")))
}

/// Message of the last failing call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tropskel_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses and validates a TOML configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tropskel_config_from_toml(toml: *const c_char, out: *mut *mut TropskelConfig) -> TropskelStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = read_str(toml, "toml")?;
        let cfg = RunConfig::from_toml_str(text).map_err(|e| (TropskelStatus::InvalidConfig, e.to_string()))?;
        *out = Box::into_raw(Box::new(TropskelConfig(cfg)));
        Ok(())
    })
}

/// Overrides the tropical parameter β.
///
/// # Safety
/// `cfg` must come from [`tropskel_config_from_toml`].
#[no_mangle]
pub unsafe extern "C" fn tropskel_config_set_beta(cfg: *mut TropskelConfig, beta: f64) -> TropskelStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        if !(beta.is_finite() && beta > 0.0) {
            return Err((TropskelStatus::OutOfRange, format!("beta must be positive, got {beta}")));
        }
        cfg.0.instance.beta = beta;
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from [`tropskel_config_from_toml`] or be null.
#[no_mangle]
pub unsafe extern "C" fn tropskel_config_free(cfg: *mut TropskelConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs a subcommand (`"triangulate"`, `"amoeba"`, `"potential-check"`,
/// `"critical"`, `"skeleton"` or `"verify"`). A run whose checks fail still
/// returns `Ok` with a report; inspect it with [`tropskel_report_pass`].
///
/// # Safety
/// `cfg` must be a live config, `subcommand` a NUL-terminated string and
/// `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tropskel_run(
    cfg: *const TropskelConfig,
    subcommand: *const c_char,
    out: *mut *mut TropskelReport,
) -> TropskelStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let name = read_str(subcommand, "subcommand")?;
        let sub: Subcommand = name.parse().map_err(|e: String| (TropskelStatus::InvalidInput, e))?;
        let report = tropskel::run(sub, &cfg.0).map_err(|e| (status_of(&e), e.to_string()))?;
        let names = vec![None; report.checks.len()];
        *out = Box::into_raw(Box::new(TropskelReport { report, json: None, names }));
        Ok(())
    })
}

/// 1 when every check passed, 0 otherwise, -1 for a null handle.
///
/// # Safety
/// `report` must be a live report or null.
#[no_mangle]
pub unsafe extern "C" fn tropskel_report_pass(report: *const TropskelReport) -> c_int {
    report.as_ref().map_or(-1, |r| c_int::from(r.report.pass))
}

/// Number of check rows, or 0 for a null handle.
///
/// # Safety
/// `report` must be a live report or null.
#[no_mangle]
pub unsafe extern "C" fn tropskel_report_check_count(report: *const TropskelReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.checks.len())
}

/// Reads check row `index`. `name` receives a string owned by the report.
///
/// # Safety
/// `report` must be a live report; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn tropskel_report_check(
    report: *mut TropskelReport,
    index: usize,
    name: *mut *const c_char,
    pass: *mut c_int,
    measured: *mut f64,
) -> TropskelStatus {
    guard(|| {
        let r = report.as_mut().ok_or_else(|| null("report"))?;
        if name.is_null() || pass.is_null() || measured.is_null() {
            return Err(null("output pointer"));
        }
        let row = r
            .report
            .checks
            .get(index)
            .ok_or_else(|| (TropskelStatus::OutOfRange, format!("check {index} of {}", r.report.checks.len())))?;
        let s = r.names[index].get_or_insert_with(|| CString::new(row.name.replace('\0', " ")).expect("no NUL"));
        *name = s.as_ptr();
        *pass = c_int::from(row.pass);
        *measured = row.measured;
        Ok(())
    })
}

/// The full report as JSON, owned by the report.
///
/// # Safety
/// `report` must be a live report or null.
#[no_mangle]
pub unsafe extern "C" fn tropskel_report_json(report: *mut TropskelReport) -> *const c_char {
    let Some(r) = report.as_mut() else {
        set_error("report is null");
        return ptr::null();
    };
    let report_ref = &r.report;
    match catch_unwind(AssertUnwindSafe(|| CString::new(report_ref.to_json()))) {
        Ok(Ok(s)) => r.json.insert(s).as_ptr(),
        _ => {
            set_error("report could not be serialized");
            ptr::null()
        }
    }
}

/// # Safety
/// `report` must come from [`tropskel_run`] or be null.
#[no_mangle]
pub unsafe extern "C" fn tropskel_report_free(report: *mut TropskelReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// The cutoff profile χ.
#[no_mangle]
pub extern "C" fn tropskel_chi(x: f64) -> f64 {
    tropskel::cutoff::chi(x)
}
