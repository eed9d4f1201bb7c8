//! C ABI over the `bvbfv` engine.
//!
//! Theories and reports are opaque handles created and freed through this
//! interface. Every entry point returns a [`BvbfvStatus`]; on failure
//! [`bvbfv_last_error`] describes the cause for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bvbfv::bf_theory::{self, LieAlgebraData};
use bvbfv::cli::{self, ReportDocument, Theory, TheoryDocument};
use bvbfv::graded_core::TruncationCaps;
use bvbfv::halfline_kernels::{Branch, CutoffFunction, Kernels};
use bvbfv::Error;

/// Status codes. Values match the command-line exit codes where both exist.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BvbfvStatus {
    Ok = 0,
    /// The computation ran and at least one verdict failed.
    CheckFailed = 1,
    /// Rejected input: schema, names, rationals, degrees, polarizations.
    Validation = 2,
    /// Quadrature, gluing or internal consistency failure.
    Numeric = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
    Panic = 6,
}

/// Parsed theory in half-line or interval geometry.
pub struct BvbfvTheory {
    theory: Theory,
}

/// Report document with its JSON rendering.
pub struct BvbfvReport {
    pass: bool,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BvbfvStatus {
    match cli::error_exit_code(e) {
        2 => BvbfvStatus::Validation,
        _ => BvbfvStatus::Numeric,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<BvbfvStatus, (BvbfvStatus, String)>) -> BvbfvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("panic inside the engine");
            BvbfvStatus::Panic
        }
    }
}

fn engine<T>(r: bvbfv::Result<T>) -> Result<T, (BvbfvStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, (BvbfvStatus, String)> {
    if p.is_null() {
        return Err((BvbfvStatus::NullPointer, "null string argument".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (BvbfvStatus::InvalidUtf8, "string argument is not UTF-8".into()))
}

fn null_out() -> (BvbfvStatus, String) {
    (BvbfvStatus::NullPointer, "null output pointer".into())
}

fn emit_report(doc: ReportDocument, out: *mut *mut BvbfvReport) -> Result<BvbfvStatus, (BvbfvStatus, String)> {
    let pass = doc.pass;
    let json = CString::new(doc.to_json()).map_err(|_| (BvbfvStatus::Numeric, "report contains NUL".to_string()))?;
    let handle = Box::into_raw(Box::new(BvbfvReport { pass, json }));
    // SAFETY: checked non-null by every caller before running the engine.
    unsafe { *out = handle };
    Ok(if pass { BvbfvStatus::Ok } else { BvbfvStatus::CheckFailed })
}

/// Engine version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bvbfv_version() -> *const c_char {
    static VERSION: &[u8] = concat!("bvbfv ", env!("CARGO_PKG_VERSION"), "\0").as_bytes();
    VERSION.as_ptr().cast()
}

/// Message for the last failing call on this thread. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn bvbfv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a theory document.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bvbfv_theory_from_json(json: *const c_char, out: *mut *mut BvbfvTheory) -> BvbfvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_out());
        }
        *out = ptr::null_mut();
        let text = read_str(json)?;
        let doc = engine(TheoryDocument::parse(text))?;
        let theory = engine(doc.build(Some(text), TruncationCaps::default(), None))?;
        *out = Box::into_raw(Box::new(BvbfvTheory { theory }));
        Ok(BvbfvStatus::Ok)
    })
}

/// Interval BF theory of a built-in Lie algebra (`"sl2"`, `"nonabelian2"`, ...).
///
/// # Safety
/// `algebra` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bvbfv_theory_bf(algebra: *const c_char, out: *mut *mut BvbfvTheory) -> BvbfvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_out());
        }
        *out = ptr::null_mut();
        let g = engine(LieAlgebraData::builtin(read_str(algebra)?))?;
        let th = engine(bf_theory::build_bf_theory(&g, TruncationCaps::default()))?;
        *out = Box::into_raw(Box::new(BvbfvTheory {
            theory: Theory::Interval(th),
        }));
        Ok(BvbfvStatus::Ok)
    })
}

/// 1 for an interval theory, 0 for a half-line theory, −1 for null.
///
/// # Safety
/// `theory` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn bvbfv_theory_is_interval(theory: *const BvbfvTheory) -> c_int {
    match theory.as_ref() {
        None => -1,
        Some(t) => c_int::from(matches!(t.theory, Theory::Interval(_))),
    }
}

/// # Safety
/// `theory` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn bvbfv_theory_free(theory: *mut BvbfvTheory) {
    if !theory.is_null() {
        drop(Box::from_raw(theory));
    }
}

/// Modified master equation; with `strict` nonzero the strict one as well.
/// Returns `Ok` or `CheckFailed` with a report in `out`.
///
/// # Safety
/// `theory` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bvbfv_check_mqme(
    theory: *const BvbfvTheory,
    strict: c_int,
    out: *mut *mut BvbfvReport,
) -> BvbfvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_out());
        }
        *out = ptr::null_mut();
        let t = theory
            .as_ref()
            .ok_or((BvbfvStatus::NullPointer, "null theory".to_string()))?;
        let mut doc = ReportDocument::new("check-mqme");
        match &t.theory {
            Theory::HalfLine(h) => {
                doc.check(engine(bvbfv::bvbfv_check::check_mqme(h))?);
                if strict != 0 {
                    doc.check(engine(bvbfv::bvbfv_check::check_qme_halfline(h))?);
                }
            }
            Theory::Interval(i) => {
                doc.check(engine(bvbfv::bvbfv_check::check_mqme_interval(i))?);
                if strict != 0 {
                    doc.check(engine(bvbfv::bvbfv_check::check_qme_interval(i))?);
                }
            }
        }
        emit_report(doc, out)
    })
}

/// Jacobi, flatness, BFV pair and anomaly battery for a built-in algebra.
///
/// # Safety
/// `algebra` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bvbfv_bf_report(algebra: *const c_char, out: *mut *mut BvbfvReport) -> BvbfvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_out());
        }
        *out = ptr::null_mut();
        let g = engine(LieAlgebraData::builtin(read_str(algebra)?))?;
        let doc = engine(cli::cmd_bf(&g, TruncationCaps::default(), None))?;
        emit_report(doc, out)
    })
}

/// Extended propagator at scale `lambda` on the branch containing `(x, y)`,
/// default cutoff. Writes 8 values to `out`: channels `K₊`, `K₋` (row) by
/// form components `1, dx, dy, dx∧dy` (column).
///
/// # Safety
/// `out` must point to at least 8 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bvbfv_extended_propagator(lambda: f64, x: f64, y: f64, out: *mut f64) -> BvbfvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_out());
        }
        let k = engine(Kernels::with_cutoff(CutoffFunction::default()))?;
        let v = engine(k.extended_propagator(lambda, Branch::of(x, y), x, y))?;
        let dst = std::slice::from_raw_parts_mut(out, 8);
        dst[..4].copy_from_slice(&v.coeffs[0]);
        dst[4..].copy_from_slice(&v.coeffs[1]);
        Ok(BvbfvStatus::Ok)
    })
}

/// 1 when every verdict passed, 0 otherwise, −1 for null.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bvbfv_report_pass(report: *const BvbfvReport) -> c_int {
    match report.as_ref() {
        None => -1,
        Some(r) => c_int::from(r.pass),
    }
}

/// JSON rendering, owned by the report.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bvbfv_report_json(report: *const BvbfvReport) -> *const c_char {
    match report.as_ref() {
        None => ptr::null(),
        Some(r) => r.json.as_ptr(),
    }
}

/// # Safety
/// `report` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn bvbfv_report_free(report: *mut BvbfvReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
