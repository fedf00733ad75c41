//! C ABI over the scenario runner and a few scalar helpers.
//!
//! Every fallible function returns an [`SsmlabStatus`]; on failure the
//! message is available from [`ssmlab_last_error`] on the same thread.
//! Strings returned through out-pointers are owned by the caller and must be
//! released with [`ssmlab_string_free`]; reports with [`ssmlab_report_free`].

use ssmlab::field::{overlap_fidelity, Grid2D, RealMap};
use ssmlab::scenario::{self, ScenarioReport};
use ssmlab::ssm;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsmlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Bad config document or failed validation.
    Config = 3,
    /// The simulation or analysis failed.
    Run = 4,
    InvalidArgument = 5,
    /// Requested metric or scenario does not exist.
    NotFound = 6,
    Panic = 7,
}

/// Opaque scenario report.
pub struct SsmlabReport {
    inner: ScenarioReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn fail(status: SsmlabStatus, msg: impl Into<String>) -> SsmlabStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SsmlabStatus) -> SsmlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(SsmlabStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, SsmlabStatus> {
    if p.is_null() {
        return Err(fail(SsmlabStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SsmlabStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> SsmlabStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            SsmlabStatus::Ok
        }
        Err(_) => fail(SsmlabStatus::Run, "string contains NUL"),
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ssmlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ssmlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// JSON array of `{name, description}` for every scenario.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ssmlab_list_scenarios(out: *mut *mut c_char) -> SsmlabStatus {
    guard(|| {
        if out.is_null() {
            return fail(SsmlabStatus::NullPointer, "out is null");
        }
        let list: Vec<_> = scenario::list_scenarios()
            .iter()
            .map(|s| serde_json::json!({"name": s.name, "description": s.description}))
            .collect();
        put_string(out, serde_json::Value::Array(list).to_string())
    })
}

/// Validate a config document. Returns `Ok` when valid; otherwise `Config`
/// and, if `problems` is non-null, a JSON array of messages through it.
///
/// # Safety
/// `json` must be a NUL-terminated string; `problems` null or valid.
#[no_mangle]
pub unsafe extern "C" fn ssmlab_validate_config_json(json: *const c_char, problems: *mut *mut c_char) -> SsmlabStatus {
    guard(|| {
        let text = match str_arg(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let list = match serde_json::from_str::<serde_json::Value>(text) {
            Ok(doc) => scenario::validate_document(&doc),
            Err(e) => vec![e.to_string()],
        };
        if list.is_empty() {
            return SsmlabStatus::Ok;
        }
        if !problems.is_null() {
            let s = put_string(problems, serde_json::to_string(&list).expect("strings serialise"));
            if s != SsmlabStatus::Ok {
                return s;
            }
        }
        fail(SsmlabStatus::Config, list.join("; "))
    })
}

/// Run a scenario. `config_json` (nullable) is overlaid on the preset and
/// must then contain a seed; `out_dir` (nullable) receives the artifacts.
/// A report is returned even when thresholds fail; check
/// [`ssmlab_report_passed`].
///
/// # Safety
/// String arguments must be null (where allowed) or NUL-terminated; `out`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn ssmlab_run_scenario(
    name: *const c_char,
    config_json: *const c_char,
    out_dir: *const c_char,
    out: *mut *mut SsmlabReport,
) -> SsmlabStatus {
    guard(|| {
        if out.is_null() {
            return fail(SsmlabStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let name = match str_arg(name, "name") {
            Ok(n) => n,
            Err(s) => return s,
        };
        if scenario::find(name).is_none() {
            return fail(SsmlabStatus::NotFound, format!("unknown scenario `{name}`"));
        }
        let file = if config_json.is_null() {
            None
        } else {
            let text = match str_arg(config_json, "config_json") {
                Ok(t) => t,
                Err(s) => return s,
            };
            match serde_json::from_str::<serde_json::Value>(text) {
                Ok(v) => Some(v),
                Err(e) => return fail(SsmlabStatus::Config, e.to_string()),
            }
        };
        let dir = if out_dir.is_null() {
            None
        } else {
            match str_arg(out_dir, "out_dir") {
                Ok(d) => Some(Path::new(d)),
                Err(s) => return s,
            }
        };
        let cfg = match scenario::load_config(name, file.as_ref(), &[]) {
            Ok(c) => c,
            Err(e) => return fail(SsmlabStatus::Config, e.to_string()),
        };
        match scenario::run_scenario(&cfg, dir) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(SsmlabReport { inner: r }));
                SsmlabStatus::Ok
            }
            Err(e) => fail(SsmlabStatus::Run, e.to_string()),
        }
    })
}

/// # Safety
/// `report` must be null or returned by [`ssmlab_run_scenario`], freed once.
#[no_mangle]
pub unsafe extern "C" fn ssmlab_report_free(report: *mut SsmlabReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ssmlab_report_passed(report: *const SsmlabReport, passed: *mut bool) -> SsmlabStatus {
    if report.is_null() || passed.is_null() {
        return fail(SsmlabStatus::NullPointer, "report or passed is null");
    }
    *passed = (*report).inner.passed;
    SsmlabStatus::Ok
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ssmlab_report_metric_count(report: *const SsmlabReport, count: *mut usize) -> SsmlabStatus {
    if report.is_null() || count.is_null() {
        return fail(SsmlabStatus::NullPointer, "report or count is null");
    }
    *count = (*report).inner.metrics.len();
    SsmlabStatus::Ok
}

/// Value of a named metric. `passed` (nullable) receives 1 or 0 for checked
/// metrics and -1 for informational ones.
///
/// # Safety
/// `report` and `value` must be valid; `name` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ssmlab_report_metric(
    report: *const SsmlabReport,
    name: *const c_char,
    value: *mut f64,
    passed: *mut i32,
) -> SsmlabStatus {
    if report.is_null() || value.is_null() {
        return fail(SsmlabStatus::NullPointer, "report or value is null");
    }
    let name = match str_arg(name, "name") {
        Ok(n) => n,
        Err(s) => return s,
    };
    match (*report).inner.metric(name) {
        Some(m) => {
            *value = m.value;
            if !passed.is_null() {
                *passed = m.passed.map_or(-1, i32::from);
            }
            SsmlabStatus::Ok
        }
        None => fail(SsmlabStatus::NotFound, format!("no metric `{name}`")),
    }
}

/// The full report as JSON.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ssmlab_report_json(report: *const SsmlabReport, out: *mut *mut c_char) -> SsmlabStatus {
    if report.is_null() || out.is_null() {
        return fail(SsmlabStatus::NullPointer, "report or out is null");
    }
    match serde_json::to_string_pretty(&(*report).inner) {
        Ok(s) => put_string(out, s),
        Err(e) => fail(SsmlabStatus::Run, e.to_string()),
    }
}

/// Amplitude factor `exp(-gamma*phi^2)`.
#[no_mangle]
pub extern "C" fn ssmlab_decoherence_envelope(phi: f64, gamma: f64) -> f64 {
    ssm::decoherence_envelope(phi, gamma)
}

/// Spatial fidelity of two row-major `ny x nx` intensity maps over the
/// whole map.
///
/// # Safety
/// `i` and `i0` must each point to `nx*ny` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ssmlab_overlap_fidelity(
    i: *const f64,
    i0: *const f64,
    nx: usize,
    ny: usize,
    out: *mut f64,
) -> SsmlabStatus {
    guard(|| {
        if i.is_null() || i0.is_null() || out.is_null() {
            return fail(SsmlabStatus::NullPointer, "null map or out pointer");
        }
        let grid = match Grid2D::new(nx, ny, 1.0, 1.0) {
            Ok(g) => g,
            Err(e) => return fail(SsmlabStatus::InvalidArgument, e.to_string()),
        };
        let n = nx * ny;
        let to_map = |p: *const f64| {
            let v = std::slice::from_raw_parts(p, n).to_vec();
            RealMap::new(grid, ndarray_from(ny, nx, v))
        };
        let (a, b) = match (to_map(i), to_map(i0)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return fail(SsmlabStatus::InvalidArgument, e.to_string()),
        };
        match overlap_fidelity(&a, &b, &grid.full_roi()) {
            Ok(f) => {
                *out = f;
                SsmlabStatus::Ok
            }
            Err(e) => fail(SsmlabStatus::InvalidArgument, e.to_string()),
        }
    })
}

fn ndarray_from(ny: usize, nx: usize, v: Vec<f64>) -> ndarray::Array2<f64> {
    ndarray::Array2::from_shape_vec((ny, nx), v).expect("length is nx*ny")
}
