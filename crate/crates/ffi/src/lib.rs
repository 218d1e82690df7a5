//! C ABI over `epsconv`.
//!
//! Functions and sets are built from JSON descriptions and handed out as
//! opaque handles. Every fallible call returns an [`EcStatus`]; on failure a
//! message is available from [`ec_last_error_message`] on the same thread.
//! Infinite values cross the boundary as IEEE infinities.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use epsconv::scenario::{execute, Scenario};
use epsconv::subdiff::{eps_subdiff_set, EpsSubdiffQuery};
use epsconv::transforms::{eps_normal_set, polar, PreparedConjugate};
use epsconv::{ConvexFn, ConvexSetDesc, Error, Tolerances, XInterval};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidInput = 4,
    DimensionMismatch = 5,
    WindowTooSmall = 6,
    Unsupported = 7,
    /// A panic was caught at the boundary.
    Internal = 8,
}

/// A proper convex function with its conjugate prepared on first use.
pub struct EcFunction {
    f: ConvexFn,
    conj: Option<PreparedConjugate>,
    tol: Tolerances,
}

/// A closed convex set.
pub struct EcSet {
    set: ConvexSetDesc,
    tol: Tolerances,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(EcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) | Error::Schema(_) => EcStatus::Parse,
            Error::DimensionMismatch { .. } => EcStatus::DimensionMismatch,
            Error::WindowTooSmall(_) => EcStatus::WindowTooSmall,
            Error::UnsupportedDomainShape(_) => EcStatus::Unsupported,
            _ => EcStatus::InvalidInput,
        };
        Fail(code, e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(EcStatus::Parse, e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> EcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EcStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            EcStatus::Internal
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(EcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null("string"));
    }
    CStr::from_ptr(s).to_str().map_err(|e| Fail(EcStatus::InvalidUtf8, e.to_string()))
}

unsafe fn slice<'a>(p: *const f64, n: usize) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null("vector"));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null("output pointer"))
}

fn check_len(expected: usize, found: usize) -> Result<(), Fail> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found }.into())
    }
}

/// Parses a function description. The handle must be released with
/// [`ec_function_free`].
///
/// # Safety
/// `json` is a NUL-terminated string; `out_fn` is writable.
#[no_mangle]
pub unsafe extern "C" fn ec_function_from_json(json: *const c_char, out_fn: *mut *mut EcFunction) -> EcStatus {
    guard(|| {
        let slot = out(out_fn)?;
        *slot = ptr::null_mut();
        let f: ConvexFn = serde_json::from_str(text(json)?)?;
        f.validate()?;
        *slot = Box::into_raw(Box::new(EcFunction { f, conj: None, tol: Tolerances::default() }));
        Ok(())
    })
}

/// # Safety
/// `f` is null or a handle from [`ec_function_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ec_function_free(f: *mut EcFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Dimension of the function's domain, 0 for a null handle.
///
/// # Safety
/// `f` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ec_function_dim(f: *const EcFunction) -> usize {
    f.as_ref().map_or(0, |h| h.f.dim())
}

/// # Safety
/// `f` is a live handle, `x` points to `n` doubles, `value` is writable.
#[no_mangle]
pub unsafe extern "C" fn ec_function_eval(f: *const EcFunction, x: *const f64, n: usize, value: *mut f64) -> EcStatus {
    guard(|| {
        let h = f.as_ref().ok_or_else(|| null("function"))?;
        let x = slice(x, n)?;
        check_len(h.f.dim(), n)?;
        *out(value)? = h.f.eval(x).to_f64();
        Ok(())
    })
}

/// Conjugate value at `xs`. `on_window_edge` (may be null) reports that the
/// supremum was reached at the edge of the sampling window, in which case the
/// true value may be larger.
///
/// # Safety
/// `f` is a live handle, `xs` points to `n` doubles, `value` is writable.
#[no_mangle]
pub unsafe extern "C" fn ec_conjugate_at(
    f: *mut EcFunction,
    xs: *const f64,
    n: usize,
    value: *mut f64,
    on_window_edge: *mut bool,
) -> EcStatus {
    guard(|| {
        let h = f.as_mut().ok_or_else(|| null("function"))?;
        let xs = slice(xs, n)?;
        check_len(h.f.dim(), n)?;
        let conj = h.conj.get_or_insert_with(|| PreparedConjugate::new(&h.f, &h.tol));
        let p = conj.eval(xs);
        *out(value)? = p.value.to_f64();
        if let Some(edge) = on_window_edge.as_mut() {
            *edge = p.on_window_edge;
        }
        Ok(())
    })
}

/// Bounds of the ε-subdifferential of a one-dimensional function at
/// `x_bar`. An empty set is reported as `lo = +inf`, `hi = -inf`.
///
/// # Safety
/// `f` is a live handle, `lo` and `hi` are writable.
#[no_mangle]
pub unsafe extern "C" fn ec_eps_subdiff_interval(
    f: *const EcFunction,
    x_bar: f64,
    eps: f64,
    lo: *mut f64,
    hi: *mut f64,
) -> EcStatus {
    guard(|| {
        let h = f.as_ref().ok_or_else(|| null("function"))?;
        check_len(1, h.f.dim())?;
        let (lo, hi) = (out(lo)?, out(hi)?);
        let q = EpsSubdiffQuery::new(h.f.clone(), vec![x_bar], eps, h.tol.clone())?;
        let s = eps_subdiff_set(&q)?;
        match s.interval_on_window(&h.tol) {
            XInterval::Empty => (*lo, *hi) = (f64::INFINITY, f64::NEG_INFINITY),
            XInterval::Closed { lo: a, hi: b } => (*lo, *hi) = (a.to_f64(), b.to_f64()),
        }
        Ok(())
    })
}

/// Whether `xs` lies in the ε-subdifferential at `x_bar` (both of length `n`).
///
/// # Safety
/// `f` is a live handle, `x_bar` and `xs` point to `n` doubles, `member` is
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ec_eps_subdiff_contains(
    f: *const EcFunction,
    x_bar: *const f64,
    xs: *const f64,
    n: usize,
    eps: f64,
    member: *mut bool,
) -> EcStatus {
    guard(|| {
        let h = f.as_ref().ok_or_else(|| null("function"))?;
        let (x_bar, xs) = (slice(x_bar, n)?, slice(xs, n)?);
        let q = EpsSubdiffQuery::new(h.f.clone(), x_bar.to_vec(), eps, h.tol.clone())?;
        *out(member)? = eps_subdiff_set(&q)?.contains(xs);
        Ok(())
    })
}

/// Parses a set description. The handle must be released with
/// [`ec_set_free`].
///
/// # Safety
/// `json` is a NUL-terminated string; `out_set` is writable.
#[no_mangle]
pub unsafe extern "C" fn ec_set_from_json(json: *const c_char, out_set: *mut *mut EcSet) -> EcStatus {
    guard(|| {
        let slot = out(out_set)?;
        *slot = ptr::null_mut();
        let set: ConvexSetDesc = serde_json::from_str(text(json)?)?;
        set.validate()?;
        *slot = Box::into_raw(Box::new(EcSet { set, tol: Tolerances::default() }));
        Ok(())
    })
}

/// # Safety
/// `s` is null or a handle from [`ec_set_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ec_set_free(s: *mut EcSet) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` is a live handle, `x` points to `n` doubles, `member` is writable.
#[no_mangle]
pub unsafe extern "C" fn ec_set_contains(s: *const EcSet, x: *const f64, n: usize, member: *mut bool) -> EcStatus {
    guard(|| {
        let h = s.as_ref().ok_or_else(|| null("set"))?;
        let x = slice(x, n)?;
        check_len(h.set.dim(), n)?;
        *out(member)? = h.set.contains(x);
        Ok(())
    })
}

/// Whether `xs` lies in the polar `{x* : <x*, x> <= 1 for all x in C}`.
///
/// # Safety
/// `s` is a live handle, `xs` points to `n` doubles, `member` is writable.
#[no_mangle]
pub unsafe extern "C" fn ec_polar_contains(s: *const EcSet, xs: *const f64, n: usize, member: *mut bool) -> EcStatus {
    guard(|| {
        let h = s.as_ref().ok_or_else(|| null("set"))?;
        let xs = slice(xs, n)?;
        check_len(h.set.dim(), n)?;
        *out(member)? = polar(&h.set, &h.tol)?.contains(xs);
        Ok(())
    })
}

/// Whether `xs` is an ε-normal to the set at `x_bar`.
///
/// # Safety
/// `s` is a live handle, `x_bar` and `xs` point to `n` doubles, `member` is
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ec_eps_normal_contains(
    s: *const EcSet,
    x_bar: *const f64,
    xs: *const f64,
    n: usize,
    eps: f64,
    member: *mut bool,
) -> EcStatus {
    guard(|| {
        let h = s.as_ref().ok_or_else(|| null("set"))?;
        let (x_bar, xs) = (slice(x_bar, n)?, slice(xs, n)?);
        check_len(h.set.dim(), n)?;
        *out(member)? = eps_normal_set(&h.set, x_bar, eps, &h.tol)?.contains(xs);
        Ok(())
    })
}

/// Runs one scenario given as JSON and writes its report as JSON to
/// `report`, to be released with [`ec_string_free`]. A scenario that runs
/// but fails its checks still returns `Ok`; see the `pass` field.
///
/// # Safety
/// `json` is a NUL-terminated string; `report` is writable.
#[no_mangle]
pub unsafe extern "C" fn ec_run_scenario_json(json: *const c_char, report: *mut *mut c_char) -> EcStatus {
    guard(|| {
        let slot = out(report)?;
        *slot = ptr::null_mut();
        let s = Scenario::from_json(text(json)?)?;
        let r = execute(&s, &Tolerances::default())?;
        let body = serde_json::to_string(&r)?;
        *slot = CString::new(body).map_err(|e| Fail(EcStatus::Internal, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` is null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ec_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
