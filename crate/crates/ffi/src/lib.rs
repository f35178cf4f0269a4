//! C ABI over `helly-core`.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `*_free` function. Every fallible call returns a
//! [`HellyStatus`] and leaves a message for [`helly_last_error`] on failure.
//! Strings returned to the caller must be released with [`helly_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use helly_core::bounds::{check_certificate, explicit_bound};
use helly_core::geometry::HPolytope;
use helly_core::harness::InstanceDocument;
use helly_core::selection::{select_with, Certificate, SelectOptions, Selector};
use helly_core::{Error, Tolerances};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HellyStatus {
    Ok = 0,
    /// The certificate was read but at least one check failed.
    CheckFailed = 1,
    /// Malformed document, bad dimensions or a cap exceeded.
    InvalidInput = 2,
    /// The computation broke down numerically or the family is unbounded.
    Numeric = 3,
    NullPointer = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HellySelector {
    Dr = 0,
    Pivovarov = 1,
}

/// A validated family of half-spaces.
pub struct HellyInstance {
    inner: HPolytope,
}

/// A selection certificate.
pub struct HellyCertificate {
    inner: Certificate,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: HellyStatus, msg: impl Into<String>) -> HellyStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> HellyStatus {
    let status = if e.is_input_error() {
        HellyStatus::InvalidInput
    } else {
        HellyStatus::Numeric
    };
    fail(status, e.to_string())
}

/// Runs `f`, converting panics into [`HellyStatus::Internal`].
fn guard(f: impl FnOnce() -> HellyStatus) -> HellyStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(HellyStatus::Internal, "panic inside helly"),
    }
}

fn tolerances(scale: f64) -> Result<Tolerances, HellyStatus> {
    if scale.is_finite() && scale > 0.0 {
        Ok(Tolerances::default().scaled(scale))
    } else {
        Err(fail(HellyStatus::InvalidInput, format!("tolerance scale must be positive, got {scale}")))
    }
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, HellyStatus> {
    if s.is_null() {
        return Err(fail(HellyStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(HellyStatus::InvalidInput, "string is not UTF-8"))
}

fn to_c_string(s: String, out: *mut *mut c_char) -> HellyStatus {
    match CString::new(s) {
        Ok(c) => {
            // SAFETY: caller checked `out` for null
            unsafe { *out = c.into_raw() };
            HellyStatus::Ok
        }
        Err(_) => fail(HellyStatus::Internal, "interior NUL in output"),
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn helly_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn helly_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// `d^d (d+1)^((3d+1)/2) / sqrt(d!)`; NaN for `d = 0`.
#[no_mangle]
pub extern "C" fn helly_explicit_bound(d: usize) -> f64 {
    if d == 0 {
        f64::NAN
    } else {
        explicit_bound(d)
    }
}

/// Parses an instance document `{"dim", "halfspaces": [{"a", "b"}], "meta"}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn helly_instance_from_json(
    json: *const c_char,
    out: *mut *mut HellyInstance,
) -> HellyStatus {
    guard(|| {
        if out.is_null() {
            return fail(HellyStatus::NullPointer, "null output pointer");
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let doc: InstanceDocument = match serde_json::from_str(text) {
            Ok(d) => d,
            Err(e) => return from_error(e.into()),
        };
        match doc.to_polytope() {
            Ok(p) => {
                *out = Box::into_raw(Box::new(HellyInstance { inner: p }));
                HellyStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Builds an instance from `m` rows: `a` is row-major `m x dim`, `b` has length `m`.
///
/// # Safety
/// `a` must point to `m * dim` doubles, `b` to `m` doubles, `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn helly_instance_from_rows(
    dim: usize,
    m: usize,
    a: *const f64,
    b: *const f64,
    out: *mut *mut HellyInstance,
) -> HellyStatus {
    guard(|| {
        if out.is_null() || a.is_null() || b.is_null() {
            return fail(HellyStatus::NullPointer, "null argument");
        }
        let Some(len) = m.checked_mul(dim) else {
            return fail(HellyStatus::InvalidInput, "size overflow");
        };
        let a = std::slice::from_raw_parts(a, len);
        let b = std::slice::from_raw_parts(b, m);
        let rows = (0..m).map(|i| (a[i * dim..(i + 1) * dim].to_vec(), b[i]));
        match HPolytope::from_rows(dim, rows) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(HellyInstance { inner: p }));
                HellyStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `inst` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn helly_instance_free(inst: *mut HellyInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Dimension of the instance, 0 for null.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn helly_instance_dim(inst: *const HellyInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.dim)
}

/// Number of half-spaces, 0 for null.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn helly_instance_len(inst: *const HellyInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.len())
}

/// Runs the selection. `seed` only matters for the randomized selector;
/// `tol_scale` multiplies every default tolerance (pass 1.0 for defaults).
///
/// # Safety
/// `inst` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn helly_select(
    inst: *const HellyInstance,
    selector: HellySelector,
    seed: u64,
    tol_scale: f64,
    out: *mut *mut HellyCertificate,
) -> HellyStatus {
    guard(|| {
        let (Some(inst), false) = (inst.as_ref(), out.is_null()) else {
            return fail(HellyStatus::NullPointer, "null argument");
        };
        let tol = match tolerances(tol_scale) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let opts = SelectOptions {
            selector: match selector {
                HellySelector::Dr => Selector::Dr,
                HellySelector::Pivovarov => Selector::Pivovarov,
            },
            seed,
        };
        match select_with(&inst.inner, &opts, &tol) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(HellyCertificate { inner: c }));
                HellyStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `cert` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn helly_certificate_free(cert: *mut HellyCertificate) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}

/// Parses a certificate document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn helly_certificate_from_json(
    json: *const c_char,
    out: *mut *mut HellyCertificate,
) -> HellyStatus {
    guard(|| {
        if out.is_null() {
            return fail(HellyStatus::NullPointer, "null output pointer");
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match serde_json::from_str::<Certificate>(text) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(HellyCertificate { inner: c }));
                HellyStatus::Ok
            }
            Err(e) => from_error(e.into()),
        }
    })
}

/// Serializes the certificate; free the string with [`helly_string_free`].
///
/// # Safety
/// `cert` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn helly_certificate_to_json(
    cert: *const HellyCertificate,
    out: *mut *mut c_char,
) -> HellyStatus {
    guard(|| {
        let (Some(cert), false) = (cert.as_ref(), out.is_null()) else {
            return fail(HellyStatus::NullPointer, "null argument");
        };
        match serde_json::to_string(&cert.inner) {
            Ok(s) => to_c_string(s, out),
            Err(e) => from_error(e.into()),
        }
    })
}

/// `vol(G) / vol(F)`; NaN for null.
///
/// # Safety
/// `cert` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn helly_certificate_ratio(cert: *const HellyCertificate) -> f64 {
    cert.as_ref().map_or(f64::NAN, |c| c.inner.ratio)
}

/// Copies the selected half-space indices into `buf` (capacity `cap`) and
/// stores the count in `len`. Fails with `InvalidInput` when `cap` is too small,
/// leaving the required size in `len`.
///
/// # Safety
/// `cert` must be a live handle, `buf` must hold `cap` entries, `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn helly_certificate_subfamily(
    cert: *const HellyCertificate,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> HellyStatus {
    guard(|| {
        let (Some(cert), false) = (cert.as_ref(), len.is_null()) else {
            return fail(HellyStatus::NullPointer, "null argument");
        };
        let g = &cert.inner.g;
        *len = g.len();
        if cap < g.len() {
            return fail(HellyStatus::InvalidInput, format!("buffer holds {cap}, need {}", g.len()));
        }
        if !g.is_empty() {
            if buf.is_null() {
                return fail(HellyStatus::NullPointer, "null buffer");
            }
            ptr::copy_nonoverlapping(g.as_ptr(), buf, g.len());
        }
        HellyStatus::Ok
    })
}

/// Re-checks the certificate with its recorded checker tolerances times
/// `tol_scale`. Returns `Ok` when every check passes and `CheckFailed`
/// otherwise. If `report` is non-null it receives the report as JSON.
///
/// # Safety
/// `cert` must be a live handle; `report` must be null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn helly_verify(
    cert: *const HellyCertificate,
    tol_scale: f64,
    report: *mut *mut c_char,
) -> HellyStatus {
    guard(|| {
        let Some(cert) = cert.as_ref() else {
            return fail(HellyStatus::NullPointer, "null certificate");
        };
        if !(tol_scale.is_finite() && tol_scale > 0.0) {
            return fail(HellyStatus::InvalidInput, "tolerance scale must be positive");
        }
        let tol = cert.inner.tolerances.checker().scaled(tol_scale);
        let r = match check_certificate(&cert.inner, &tol) {
            Ok(r) => r,
            Err(e) => return from_error(e),
        };
        if !report.is_null() {
            let json = match serde_json::to_string(&r) {
                Ok(s) => s,
                Err(e) => return from_error(e.into()),
            };
            let s = to_c_string(json, report);
            if s != HellyStatus::Ok {
                return s;
            }
        }
        if r.passed {
            HellyStatus::Ok
        } else {
            fail(HellyStatus::CheckFailed, format!("failed checks: {}", r.failures().join(", ")))
        }
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn helly_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
