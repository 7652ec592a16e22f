//! C ABI over `hermdens`.
//!
//! Exact values cross the boundary as opaque `HdValue` handles; read them
//! with `hd_value_expr`, `hd_value_eval` or `hd_value_eval_f64`. Every call
//! returns an `HdStatus`; on failure `hd_last_error` describes the problem
//! for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hermdens::cdens::{alpha_prime, alpha_value, jfun_n1, Partition};
use hermdens::reps::MonomialHermitian;
use hermdens::symb::format_rat;
use hermdens::tree::{intersect_zy, TreeInstance};
use hermdens::whit::{rat_to_f64, w_density_n1};
use hermdens::{Error, SignedRational};

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HdStatus {
    Ok = 0,
    /// Arguments rejected by the library.
    Invalid = 1,
    /// A brute-force count exceeded its budget.
    Budget = 2,
    /// An internal consistency check failed.
    Internal = 3,
    NullPointer = 4,
    Utf8 = 5,
    Panic = 6,
}

/// An exact rational function of `q`.
pub struct HdValue(SignedRational);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> HdStatus {
    match e {
        Error::Invalid(_) | Error::DivisionByZero | Error::Pole(_) => HdStatus::Invalid,
        Error::Budget(_) => HdStatus::Budget,
        _ => HdStatus::Internal,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (HdStatus, String)>) -> HdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HdStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("panic inside hermdens");
            HdStatus::Panic
        }
    }
}

fn lib<T>(r: hermdens::Result<T>) -> Result<T, (HdStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, (HdStatus, String)> {
    if p.is_null() {
        return Err((HdStatus::NullPointer, "null string argument".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (HdStatus::Utf8, "string argument is not UTF-8".into()))
}

unsafe fn read_i64s<'a>(p: *const i64, len: usize) -> Result<&'a [i64], (HdStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err((HdStatus::NullPointer, "null array argument".into()));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), (HdStatus, String)> {
    if out.is_null() {
        return Err((HdStatus::NullPointer, "null output pointer".into()));
    }
    out.write(v);
    Ok(())
}

fn boxed(v: SignedRational) -> *mut HdValue {
    Box::into_raw(Box::new(HdValue(v)))
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn hd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn hd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `W_{h,t}(B, 0)` and `−d/dx W_{h,t}(B, r)` at `r = 0`, for `B` of size 2
/// written as `diag:a,b` or `mono:sigma=[..];e=[..]`.
///
/// # Safety
/// `b` must be a NUL-terminated string; `out_value` and `out_derivative`
/// must be writable. Free the results with `hd_value_free`.
#[no_mangle]
pub unsafe extern "C" fn hd_wdens_n1(
    b: *const c_char,
    h: u32,
    t: u32,
    out_value: *mut *mut HdValue,
    out_derivative: *mut *mut HdValue,
) -> HdStatus {
    guard(|| {
        let b: MonomialHermitian = lib(read_str(b)?.parse())?;
        if out_value.is_null() || out_derivative.is_null() {
            return Err((HdStatus::NullPointer, "null output pointer".into()));
        }
        let w = lib(w_density_n1(&b, h as usize, t as usize))?;
        write_out(out_value, boxed(w.value))?;
        write_out(out_derivative, boxed(w.derivative))
    })
}

/// `𝒥_t(B)` at `n = 1`.
///
/// # Safety
/// `b` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hd_jfun_n1(t: u32, b: *const c_char, out: *mut *mut HdValue) -> HdStatus {
    guard(|| {
        let b: MonomialHermitian = lib(read_str(b)?.parse())?;
        let v = lib(jfun_n1(t as usize, &b))?;
        write_out(out, boxed(v))
    })
}

/// `α(π^ξ, π^λ)`, or its derivative along the self-dual padding when
/// `prime` is set.
///
/// # Safety
/// `xi` and `lam` must point to `xi_len` and `lam_len` readable values
/// (either may be null when its length is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hd_alpha(
    xi: *const i64,
    xi_len: usize,
    lam: *const i64,
    lam_len: usize,
    prime: bool,
    out: *mut *mut HdValue,
) -> HdStatus {
    guard(|| {
        let x = lib(Partition::from_exps(read_i64s(xi, xi_len)?))?;
        let l = lib(Partition::from_exps(read_i64s(lam, lam_len)?))?;
        let v = lib(if prime {
            alpha_prime(&x, &l)
        } else {
            alpha_value(&x, &l)
        })?;
        write_out(out, boxed(v))
    })
}

/// One constant of the β system: `β^h_i` (or `β^{2n−h}_i` when `dual`), or
/// `δ_h` when `index` equals `n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hd_beta(n: u32, h: u32, index: u32, dual: bool, out: *mut *mut HdValue) -> HdStatus {
    guard(|| {
        let sys = lib(hermdens::beta::solve_constants(n as usize, h as usize))?;
        let c = sys
            .solution
            .ok_or((HdStatus::Internal, "beta system is singular".to_string()))?;
        let i = index as usize;
        let v = if i == n as usize {
            c.delta
        } else if i < n as usize {
            if dual {
                c.beta_dual[i].clone()
            } else {
                c.beta_h[i].clone()
            }
        } else {
            return Err((HdStatus::Invalid, format!("index {i} out of range 0..={n}")));
        };
        write_out(out, boxed(v))
    })
}

/// Twice the tree intersection number, so that half-integers stay exact.
/// Pass a negative `vdet` when it is not known (allowed in Case 3 only).
///
/// # Safety
/// `out_twice` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hd_tree_intersection(
    q: i64,
    m_x: i64,
    m_y: i64,
    d: i64,
    vdet: i64,
    out_twice: *mut i64,
) -> HdStatus {
    guard(|| {
        let inst = lib(TreeInstance::new(q, m_x, m_y, d, (vdet >= 0).then_some(vdet)))?;
        let r = lib(intersect_zy(&inst))?;
        let twice = i64::try_from(r.twice_intersection)
            .map_err(|_| (HdStatus::Internal, "result overflows i64".to_string()))?;
        write_out(out_twice, twice)
    })
}

/// The value as an expression in `q`. Free with `hd_string_free`.
///
/// # Safety
/// `v` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hd_value_expr(v: *const HdValue) -> *mut c_char {
    match v.as_ref() {
        Some(v) => to_c(v.0.to_q_string()),
        None => {
            set_error("null value handle");
            ptr::null_mut()
        }
    }
}

/// Exact value at `q` as `num/den` (or an integer), through `out`.
/// Free the string with `hd_string_free`.
///
/// # Safety
/// `v` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hd_value_eval(v: *const HdValue, q: i64, out: *mut *mut c_char) -> HdStatus {
    guard(|| {
        let v = v
            .as_ref()
            .ok_or((HdStatus::NullPointer, "null value handle".to_string()))?;
        let r = lib(v.0.eval(q))?;
        write_out(out, to_c(format_rat(&r)))
    })
}

/// Nearest `double` to the value at `q`.
///
/// # Safety
/// `v` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hd_value_eval_f64(v: *const HdValue, q: i64, out: *mut f64) -> HdStatus {
    guard(|| {
        let v = v
            .as_ref()
            .ok_or((HdStatus::NullPointer, "null value handle".to_string()))?;
        let r = lib(v.0.eval(q))?;
        write_out(out, rat_to_f64(&r))
    })
}

/// # Safety
/// `v` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hd_value_free(v: *mut HdValue) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// # Safety
/// `s` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
