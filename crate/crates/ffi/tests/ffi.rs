use std::ffi::{CStr, CString};
use std::ptr;

use bvbfv::halfline_kernels::{Branch, CutoffFunction, Kernels};
use bvbfv_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(bvbfv_last_error()) }.to_str().unwrap().to_string()
}

fn report_json(r: *const BvbfvReport) -> serde_json::Value {
    let text = unsafe { CStr::from_ptr(bvbfv_report_json(r)) }.to_str().unwrap();
    serde_json::from_str(text).unwrap()
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(bvbfv_version()) }.to_str().unwrap();
    assert!(v.starts_with("bvbfv "), "{v}");
}

#[test]
fn theory_handles_and_mqme_reports() {
    let example = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/examples/bf_nonunimodular.json");
    let json = cstr(&std::fs::read_to_string(example).unwrap());
    let mut th = ptr::null_mut();
    assert_eq!(unsafe { bvbfv_theory_from_json(json.as_ptr(), &mut th) }, BvbfvStatus::Ok);
    assert_eq!(unsafe { bvbfv_theory_is_interval(th) }, 1);

    let mut r = ptr::null_mut();
    assert_eq!(unsafe { bvbfv_check_mqme(th, 0, &mut r) }, BvbfvStatus::Ok);
    assert_eq!(unsafe { bvbfv_report_pass(r) }, 1);
    assert_eq!(report_json(r)["pass"], true);
    unsafe { bvbfv_report_free(r) };

    let mut r = ptr::null_mut();
    assert_eq!(unsafe { bvbfv_check_mqme(th, 1, &mut r) }, BvbfvStatus::CheckFailed);
    assert_eq!(unsafe { bvbfv_report_pass(r) }, 0);
    let doc = report_json(r);
    assert_eq!(doc["pass"], false);
    assert_eq!(doc["command"], "check-mqme");
    unsafe { bvbfv_report_free(r) };
    unsafe { bvbfv_theory_free(th) };

    let mut th = ptr::null_mut();
    assert_eq!(unsafe { bvbfv_theory_bf(cstr("so3").as_ptr(), &mut th) }, BvbfvStatus::Ok);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { bvbfv_check_mqme(th, 1, &mut r) }, BvbfvStatus::Ok);
    unsafe { bvbfv_report_free(r) };
    unsafe { bvbfv_theory_free(th) };
}

#[test]
fn bf_report_flags_the_anomaly() {
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { bvbfv_bf_report(cstr("nonabelian2").as_ptr(), &mut r) }, BvbfvStatus::Ok);
    let doc = report_json(r);
    assert!(doc["flags"].as_array().unwrap().iter().any(|f| f == "anomalous"));
    assert_eq!(doc["pass"].as_bool().unwrap(), unsafe { bvbfv_report_pass(r) } == 1);
    unsafe { bvbfv_report_free(r) };
}

#[test]
fn rejected_input_sets_the_status_and_message() {
    let mut th = ptr::null_mut();
    assert_eq!(unsafe { bvbfv_theory_from_json(cstr("{").as_ptr(), &mut th) }, BvbfvStatus::Validation);
    assert!(th.is_null());
    assert!(last_error().contains("theory document"), "{}", last_error());

    assert_eq!(unsafe { bvbfv_theory_bf(cstr("e8").as_ptr(), &mut th) }, BvbfvStatus::Validation);
    assert!(!last_error().is_empty());

    let bad = [0xffu8, 0xfe, 0];
    let status = unsafe { bvbfv_theory_bf(bad.as_ptr().cast(), &mut th) };
    assert_eq!(status, BvbfvStatus::InvalidUtf8);

    let mut out = [0.0f64; 8];
    let status = unsafe { bvbfv_extended_propagator(-1.0, 0.1, 0.2, out.as_mut_ptr()) };
    assert!(matches!(status, BvbfvStatus::Validation | BvbfvStatus::Numeric));
}

#[test]
fn null_pointers_are_reported() {
    let mut th = ptr::null_mut();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { bvbfv_theory_from_json(ptr::null(), &mut th) }, BvbfvStatus::NullPointer);
    assert_eq!(unsafe { bvbfv_theory_bf(cstr("sl2").as_ptr(), ptr::null_mut()) }, BvbfvStatus::NullPointer);
    assert_eq!(unsafe { bvbfv_check_mqme(ptr::null(), 0, &mut r) }, BvbfvStatus::NullPointer);
    assert_eq!(unsafe { bvbfv_bf_report(ptr::null(), &mut r) }, BvbfvStatus::NullPointer);
    assert_eq!(unsafe { bvbfv_extended_propagator(1.0, 0.1, 0.2, ptr::null_mut()) }, BvbfvStatus::NullPointer);
    assert_eq!(unsafe { bvbfv_theory_is_interval(ptr::null()) }, -1);
    assert_eq!(unsafe { bvbfv_report_pass(ptr::null()) }, -1);
    assert!(unsafe { bvbfv_report_json(ptr::null()) }.is_null());
    unsafe {
        bvbfv_theory_free(ptr::null_mut());
        bvbfv_report_free(ptr::null_mut());
    }
}

#[test]
fn extended_propagator_matches_the_engine() {
    let k = Kernels::with_cutoff(CutoffFunction::default()).unwrap();
    for &(lam, x, y) in &[(0.5, 0.1, 0.2), (1.0, 0.3, 0.05), (2.0, 0.0, 0.4)] {
        let mut out = [f64::NAN; 8];
        assert_eq!(unsafe { bvbfv_extended_propagator(lam, x, y, out.as_mut_ptr()) }, BvbfvStatus::Ok);
        let v = k.extended_propagator(lam, Branch::of(x, y), x, y).unwrap();
        assert_eq!(out[..4], v.coeffs[0]);
        assert_eq!(out[4..], v.coeffs[1]);
        assert!(out.iter().all(|z| z.is_finite()));
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bvbfv.h")).unwrap();
    for name in [
        "bvbfv_version",
        "bvbfv_last_error",
        "bvbfv_theory_from_json",
        "bvbfv_theory_bf",
        "bvbfv_theory_is_interval",
        "bvbfv_theory_free",
        "bvbfv_check_mqme",
        "bvbfv_bf_report",
        "bvbfv_extended_propagator",
        "bvbfv_report_pass",
        "bvbfv_report_json",
        "bvbfv_report_free",
        "BvbfvStatus",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
