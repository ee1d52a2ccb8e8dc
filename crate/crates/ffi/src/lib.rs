//! C interface: opaque expression and report handles, status codes, and a
//! per-thread last-error message.
//!
//! Strings returned to the caller are owned by the caller and released with
//! [`ws_string_free`]. Handles are released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use warpsol::catalog::CatalogParams;
use warpsol::error::Error;
use warpsol::geometry::Backend;
use warpsol::scenario::{parse_config, run_catalog, run_config, Overrides, Report};
use warpsol::Expression;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidInput = 4,
    NumericalError = 5,
    Panic = 6,
}

/// Parsed expression.
pub struct WsExpr {
    inner: Expression,
}

/// Verification report of a scenario or catalog run.
pub struct WsReport {
    inner: Report,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ws_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

struct Fail(WsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parse(_) => WsStatus::ParseError,
            ref other if other.exit_code() == 2 => WsStatus::InvalidInput,
            _ => WsStatus::NumericalError,
        };
        Fail(status, e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> WsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            WsStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(WsStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(WsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(WsStatus::NullPointer, format!("{what} is NULL")))
}

fn check_out<T>(out: *mut T) -> Result<(), Fail> {
    if out.is_null() {
        Err(Fail(WsStatus::NullPointer, "output pointer is NULL".into()))
    } else {
        Ok(())
    }
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Parse `source` into a new expression handle.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ws_expr_parse(source: *const c_char, out: *mut *mut WsExpr) -> WsStatus {
    guard(|| {
        check_out(out)?;
        let e = warpsol::parse(text(source, "source")?).map_err(|e| Fail::from(Error::from(e)))?;
        *out = Box::into_raw(Box::new(WsExpr { inner: e }));
        Ok(())
    })
}

/// Exact derivative of `expr` with respect to `var`, as a new handle.
///
/// # Safety
/// `expr` must come from this library; `var` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ws_expr_differentiate(expr: *const WsExpr, var: *const c_char, out: *mut *mut WsExpr) -> WsStatus {
    guard(|| {
        check_out(out)?;
        let e = handle(expr, "expr")?;
        let d = e.inner.differentiate(text(var, "var")?);
        *out = Box::into_raw(Box::new(WsExpr { inner: d }));
        Ok(())
    })
}

/// Evaluate `expr` with `names[i] = values[i]` for `i < len`.
///
/// # Safety
/// `names` and `values` must point to `len` entries each.
#[no_mangle]
pub unsafe extern "C" fn ws_expr_evaluate(
    expr: *const WsExpr,
    names: *const *const c_char,
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> WsStatus {
    guard(|| {
        check_out(out)?;
        let e = handle(expr, "expr")?;
        if len > 0 && (names.is_null() || values.is_null()) {
            return Err(Fail(WsStatus::NullPointer, "names or values is NULL".into()));
        }
        let mut vars = Vec::with_capacity(len);
        for i in 0..len {
            vars.push(text(*names.add(i), "variable name")?.to_string());
        }
        let x: Vec<f64> = (0..len).map(|i| *values.add(i)).collect();
        let compiled = e.inner.compile(&vars).map_err(|e| Fail::from(Error::from(e)))?;
        *out = compiled.eval(&x).map_err(|e| Fail::from(Error::from(e)))?;
        Ok(())
    })
}

/// Render `expr` as text that parses back to the same expression.
/// Returns NULL on a NULL handle.
///
/// # Safety
/// `expr` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn ws_expr_render(expr: *const WsExpr) -> *mut c_char {
    match expr.as_ref() {
        Some(e) => owned_string(e.inner.to_string()),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `expr` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ws_expr_free(expr: *mut WsExpr) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// # Safety
/// `s` must be a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ws_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Run catalog instance `name`. `params_json` is NULL or a JSON object of
/// catalog parameters; `fd_step <= 0` selects symbolic derivatives.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ws_catalog_run(
    name: *const c_char,
    params_json: *const c_char,
    fd_step: f64,
    out: *mut *mut WsReport,
) -> WsStatus {
    guard(|| {
        check_out(out)?;
        let name = text(name, "name")?;
        let params: CatalogParams = if params_json.is_null() {
            CatalogParams::default()
        } else {
            serde_json::from_str(text(params_json, "params_json")?)
                .map_err(|e| Fail(WsStatus::InvalidInput, format!("catalog parameters: {e}")))?
        };
        let backend = if fd_step > 0.0 { Backend::fd(fd_step) } else { Backend::Symbolic };
        let report = run_catalog(name, &params, backend, None)?;
        *out = Box::into_raw(Box::new(WsReport { inner: report }));
        Ok(())
    })
}

/// Run a JSON scenario config.
///
/// # Safety
/// `config_json` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ws_scenario_run(config_json: *const c_char, out: *mut *mut WsReport) -> WsStatus {
    guard(|| {
        check_out(out)?;
        let config = parse_config(text(config_json, "config_json")?).map_err(|e| Fail(WsStatus::InvalidInput, e.to_string()))?;
        let (report, _) = run_config(&config, &Overrides::default())?;
        *out = Box::into_raw(Box::new(WsReport { inner: report }));
        Ok(())
    })
}

/// Report as JSON, or NULL on a NULL handle.
///
/// # Safety
/// `report` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn ws_report_json(report: *const WsReport) -> *mut c_char {
    match report.as_ref() {
        Some(r) => owned_string(r.inner.to_json()),
        None => ptr::null_mut(),
    }
}

/// 1 when every checked residual is within tolerance, 0 when one is not,
/// -1 on a NULL handle.
///
/// # Safety
/// `report` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn ws_report_passed(report: *const WsReport) -> c_int {
    match report.as_ref() {
        Some(r) => c_int::from(r.inner.passed),
        None => -1,
    }
}

/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ws_report_free(report: *mut WsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
