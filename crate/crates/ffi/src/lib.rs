//! C ABI for the hessric engine.
//!
//! Solutions and reports are opaque handles owned by the caller and released
//! with their `*_free` function. Every entry point returns an [`HrStatus`]
//! (or a sentinel) and never unwinds across the boundary; the message of the
//! most recent failure on the calling thread is available from
//! [`hr_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::OnceLock;

use hessric::catalog::{self, CatalogError, SolutionSpec};
use hessric::geometry::{curvature_at_order, GeometryError};
use hessric::verify::{self, ToleranceConfig, VerificationReport, VerifyError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    UnknownCase = 3,
    OutOfDomain = 4,
    Geometry = 5,
    InvalidArgument = 6,
    Panic = 7,
}

/// Suite settings; obtain defaults from [`hr_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrConfig {
    pub tol_identity: f64,
    pub tol_ode_limited: f64,
    pub tol_negative_control: f64,
    pub samples: u32,
    pub seed: u64,
    pub jet_order: u32,
}

impl From<ToleranceConfig> for HrConfig {
    fn from(c: ToleranceConfig) -> Self {
        HrConfig {
            tol_identity: c.tol_identity,
            tol_ode_limited: c.tol_ode_limited,
            tol_negative_control: c.tol_negative_control,
            samples: c.samples as u32,
            seed: c.seed,
            jet_order: c.jet_order as u32,
        }
    }
}

impl From<HrConfig> for ToleranceConfig {
    fn from(c: HrConfig) -> Self {
        ToleranceConfig {
            tol_identity: c.tol_identity,
            tol_ode_limited: c.tol_ode_limited,
            tol_negative_control: c.tol_negative_control,
            samples: c.samples as usize,
            seed: c.seed,
            jet_order: c.jet_order as usize,
        }
    }
}

/// A catalog solution (manifold chart, `f`, and its expected constants).
pub struct HrSolution {
    spec: SolutionSpec,
}

/// A finished verification report.
pub struct HrReport {
    report: VerificationReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: HrStatus, msg: impl Into<String>) -> HrStatus {
    set_error(msg);
    status
}

fn guard(body: impl FnOnce() -> HrStatus) -> HrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(HrStatus::Panic, "internal panic"),
    }
}

fn status_of_geometry(e: &GeometryError) -> HrStatus {
    match e {
        GeometryError::OutsideDomain { .. } => HrStatus::OutOfDomain,
        GeometryError::WrongDimension { .. } => HrStatus::InvalidArgument,
        _ => HrStatus::Geometry,
    }
}

fn status_of(e: &VerifyError) -> HrStatus {
    match e {
        VerifyError::Catalog(CatalogError::UnknownCase(_)) => HrStatus::UnknownCase,
        VerifyError::Catalog(_) => HrStatus::Geometry,
        VerifyError::Geometry(g) => status_of_geometry(g),
        VerifyError::NearCritical { .. } => HrStatus::Geometry,
        VerifyError::NotApplicable(_) | VerifyError::InvalidConfig(_) => HrStatus::InvalidArgument,
    }
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, HrStatus> {
    if s.is_null() {
        return Err(fail(HrStatus::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(HrStatus::InvalidUtf8, "string argument is not UTF-8"))
}

/// # Safety
/// `point` must be null or point to `len` readable doubles.
unsafe fn read_point<'a>(point: *const f64, len: usize) -> Result<&'a [f64], HrStatus> {
    if point.is_null() {
        return Err(fail(HrStatus::NullPointer, "point is null"));
    }
    Ok(std::slice::from_raw_parts(point, len))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn hr_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(env!("CARGO_PKG_VERSION")).expect("version has no NUL"))
        .as_ptr()
}

/// Message of the last failed call on this thread; valid until the next
/// failing call on the same thread. Empty when nothing failed yet.
#[no_mangle]
pub extern "C" fn hr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn hr_config_default() -> HrConfig {
    ToleranceConfig::default().into()
}

/// Number of catalog cases.
#[no_mangle]
pub extern "C" fn hr_case_count() -> usize {
    catalog::CASE_NAMES.len()
}

/// Name of catalog case `index` (static storage), or null when out of range.
#[no_mangle]
pub extern "C" fn hr_case_name(index: usize) -> *const c_char {
    static NAMES: OnceLock<Vec<CString>> = OnceLock::new();
    let names = NAMES.get_or_init(|| {
        catalog::CASE_NAMES
            .iter()
            .map(|n| CString::new(*n).expect("case names have no NUL"))
            .collect()
    });
    names.get(index).map_or(ptr::null(), |n| n.as_ptr())
}

/// Builds the named case into `*out`.
///
/// # Safety
/// `name` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hr_solution_new(name: *const c_char, out: *mut *mut HrSolution) -> HrStatus {
    guard(|| {
        if out.is_null() {
            return fail(HrStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let name = match read_str(name) {
            Ok(n) => n,
            Err(s) => return s,
        };
        match catalog::by_name(name) {
            Ok(spec) => {
                *out = Box::into_raw(Box::new(HrSolution { spec }));
                HrStatus::Ok
            }
            Err(e) => {
                let status = status_of(&VerifyError::Catalog(e.clone()));
                fail(status, e.to_string())
            }
        }
    })
}

/// # Safety
/// `solution` must be null or a handle from [`hr_solution_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hr_solution_free(solution: *mut HrSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Chart dimension, or 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hr_solution_dim(solution: *const HrSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.spec.dim())
}

/// `max |∇²f + f·Ric|` at a point of the chart.
///
/// # Safety
/// `solution` must be a live handle, `point` must hold `len` doubles, and
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hr_residual_main(
    solution: *const HrSolution,
    point: *const f64,
    len: usize,
    out: *mut f64,
) -> HrStatus {
    guard(|| {
        let (Some(sol), false) = (solution.as_ref(), out.is_null()) else {
            return fail(HrStatus::NullPointer, "solution or out is null");
        };
        let p = match read_point(point, len) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match verify::residual_main(&sol.spec, p) {
            Ok(r) => {
                *out = r;
                HrStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Scalar curvature at a point of the chart.
///
/// # Safety
/// As for [`hr_residual_main`].
#[no_mangle]
pub unsafe extern "C" fn hr_scalar_curvature(
    solution: *const HrSolution,
    point: *const f64,
    len: usize,
    out: *mut f64,
) -> HrStatus {
    guard(|| {
        let (Some(sol), false) = (solution.as_ref(), out.is_null()) else {
            return fail(HrStatus::NullPointer, "solution or out is null");
        };
        let p = match read_point(point, len) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match curvature_at_order(&sol.spec.patch, p, 2) {
            Ok(c) => {
                *out = c.scalar;
                HrStatus::Ok
            }
            Err(e) => fail(status_of_geometry(&e), e.to_string()),
        }
    })
}

/// Runs the verification suite on a named case. `config` may be null for
/// defaults.
///
/// # Safety
/// `name` must be a valid NUL-terminated string, `config` null or valid, and
/// `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hr_run_suite(
    name: *const c_char,
    config: *const HrConfig,
    out: *mut *mut HrReport,
) -> HrStatus {
    guard(|| {
        if out.is_null() {
            return fail(HrStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let name = match read_str(name) {
            Ok(n) => n,
            Err(s) => return s,
        };
        let cfg: ToleranceConfig = config.as_ref().map_or_else(ToleranceConfig::default, |c| (*c).into());
        match verify::run_suite(name, &cfg) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(HrReport { report }));
                HrStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Overall verdict; false for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hr_report_passed(report: *const HrReport) -> bool {
    report.as_ref().is_some_and(|r| r.report.pass)
}

/// The report as JSON; release with [`hr_string_free`]. Null on failure.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hr_report_json(report: *const HrReport) -> *mut c_char {
    let Some(r) = report.as_ref() else {
        set_error("report is null");
        return ptr::null_mut();
    };
    match serde_json::to_string(&r.report).ok().and_then(|s| CString::new(s).ok()) {
        Some(s) => s.into_raw(),
        None => {
            set_error("report could not be serialized");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `report` must be null or a handle from [`hr_run_suite`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hr_report_free(report: *mut HrReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
