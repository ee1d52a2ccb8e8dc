use std::ffi::{CStr, CString};
use std::ptr;

use warpsol_ffi::*;

fn last_error() -> String {
    let p = ws_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { ws_string_free(p) };
    s
}

#[test]
fn parse_differentiate_evaluate() {
    let src = CString::new("x^2 * sin(y)").unwrap();
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { ws_expr_parse(src.as_ptr(), &mut e) }, WsStatus::Ok);
    let x = CString::new("x").unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { ws_expr_differentiate(e, x.as_ptr(), &mut d) }, WsStatus::Ok);

    let y = CString::new("y").unwrap();
    let names = [x.as_ptr(), y.as_ptr()];
    let values = [1.5, 0.3];
    let mut v = 0.0;
    assert_eq!(unsafe { ws_expr_evaluate(d, names.as_ptr(), values.as_ptr(), 2, &mut v) }, WsStatus::Ok);
    assert!((v - 3.0 * 0.3_f64.sin()).abs() < 1e-15);

    let text = take_string(unsafe { ws_expr_render(d) });
    let back = CString::new(text).unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { ws_expr_parse(back.as_ptr(), &mut r) }, WsStatus::Ok);
    let mut w = 0.0;
    assert_eq!(unsafe { ws_expr_evaluate(r, names.as_ptr(), values.as_ptr(), 2, &mut w) }, WsStatus::Ok);
    assert_eq!(v, w);
    unsafe {
        ws_expr_free(e);
        ws_expr_free(d);
        ws_expr_free(r);
    }
}

#[test]
fn errors_set_status_and_message() {
    let bad = CString::new("sin(x").unwrap();
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { ws_expr_parse(bad.as_ptr(), &mut e) }, WsStatus::ParseError);
    assert!(e.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(unsafe { ws_expr_parse(ptr::null(), &mut e) }, WsStatus::NullPointer);
    assert!(last_error().contains("NULL"));

    let src = CString::new("x + z").unwrap();
    assert_eq!(unsafe { ws_expr_parse(src.as_ptr(), &mut e) }, WsStatus::Ok);
    assert!(ws_last_error().is_null());
    let x = CString::new("x").unwrap();
    let names = [x.as_ptr()];
    let mut v = 0.0;
    let status = unsafe { ws_expr_evaluate(e, names.as_ptr(), [1.0].as_ptr(), 1, &mut v) };
    assert_eq!(status, WsStatus::NumericalError);
    unsafe { ws_expr_free(e) };

    unsafe {
        ws_expr_free(ptr::null_mut());
        ws_report_free(ptr::null_mut());
        ws_string_free(ptr::null_mut());
    }
    assert_eq!(unsafe { ws_report_passed(ptr::null()) }, -1);
}

#[test]
fn catalog_report_round_trip() {
    let name = CString::new("hyperbolic-sinh").unwrap();
    let params = CString::new(r#"{"m": 3}"#).unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { ws_catalog_run(name.as_ptr(), params.as_ptr(), 0.0, &mut r) }, WsStatus::Ok);
    assert_eq!(unsafe { ws_report_passed(r) }, 1);
    let json = take_string(unsafe { ws_report_json(r) });
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["scenario"], "hyperbolic-sinh");
    assert!((v["mu"]["mean"].as_f64().unwrap() + 2.0).abs() < 1e-9);
    unsafe { ws_report_free(r) };

    let unknown = CString::new("nope").unwrap();
    assert_eq!(unsafe { ws_catalog_run(unknown.as_ptr(), ptr::null(), 0.0, &mut r) }, WsStatus::InvalidInput);
    let junk = CString::new(r#"{"q": 1}"#).unwrap();
    assert_eq!(unsafe { ws_catalog_run(name.as_ptr(), junk.as_ptr(), 0.0, &mut r) }, WsStatus::InvalidInput);
}

#[test]
fn scenario_run_reports_config_errors() {
    let cfg = CString::new(r#"{"kind": "catalog", "name": "product-trivial"}"#).unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { ws_scenario_run(cfg.as_ptr(), &mut r) }, WsStatus::Ok);
    assert_eq!(unsafe { ws_report_passed(r) }, 1);
    unsafe { ws_report_free(r) };

    let bad = CString::new(r#"{"kind": "catalog", "name": 4}"#).unwrap();
    assert_eq!(unsafe { ws_scenario_run(bad.as_ptr(), &mut r) }, WsStatus::InvalidInput);
    assert!(last_error().contains("name"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/warpsol.h")).unwrap();
    for f in [
        "ws_expr_parse",
        "ws_expr_differentiate",
        "ws_expr_evaluate",
        "ws_expr_render",
        "ws_expr_free",
        "ws_string_free",
        "ws_catalog_run",
        "ws_scenario_run",
        "ws_report_json",
        "ws_report_passed",
        "ws_report_free",
        "ws_last_error",
        "WS_STATUS_OK",
        "typedef struct WsExpr WsExpr",
    ] {
        assert!(header.contains(f), "missing {f}");
    }
}
