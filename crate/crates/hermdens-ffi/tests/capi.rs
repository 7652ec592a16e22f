use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use hermdens_ffi::*;

fn expr(v: *const HdValue) -> String {
    unsafe {
        let s = hd_value_expr(v);
        let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
        hd_string_free(s);
        out
    }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(hd_last_error()).to_string_lossy().into_owned() }
}

#[test]
fn wdens_roundtrip() {
    let b = CString::new("diag:0,-1").unwrap();
    let (mut v, mut d) = (ptr::null_mut(), ptr::null_mut());
    let st = unsafe { hd_wdens_n1(b.as_ptr(), 1, 1, &mut v, &mut d) };
    assert_eq!(st, HdStatus::Ok);
    assert_eq!(expr(v), "q^-3 + 2*q^-4 + q^-5");
    assert_eq!(expr(d), "-q^-4 - q^-5");
    let mut s = ptr::null_mut();
    let mut x = 0.0;
    unsafe {
        assert_eq!(hd_value_eval(v, 3, &mut s), HdStatus::Ok);
        assert_eq!(CStr::from_ptr(s).to_str().unwrap(), "16/243");
        hd_string_free(s);
        assert_eq!(hd_value_eval_f64(v, 3, &mut x), HdStatus::Ok);
        hd_value_free(v);
        hd_value_free(d);
    }
    assert!((x - 16.0 / 243.0).abs() < 1e-15);
}

#[test]
fn beta_and_alpha() {
    let mut v = ptr::null_mut();
    unsafe {
        assert_eq!(hd_beta(1, 1, 0, false, &mut v), HdStatus::Ok);
        assert_eq!(expr(v), "-1/(q^3 - q)");
        hd_value_free(v);
        assert_eq!(hd_beta(1, 1, 5, false, &mut v), HdStatus::Invalid);
        assert!(last_error().contains("out of range"));

        let xi = [0i64, 0];
        let lam = [2i64, 0];
        assert_eq!(hd_alpha(xi.as_ptr(), 2, lam.as_ptr(), 2, true, &mut v), HdStatus::Ok);
        assert_eq!(expr(v), "-1 - 2*q^-1 + 2*q^-2 + 3*q^-3");
        hd_value_free(v);
        assert_eq!(
            hd_alpha(ptr::null(), 2, lam.as_ptr(), 2, false, &mut v),
            HdStatus::NullPointer
        );
    }
}

#[test]
fn errors_are_reported() {
    let mut v = ptr::null_mut();
    let bad = CString::new("diag:oops").unwrap();
    let st = unsafe { hd_jfun_n1(1, bad.as_ptr(), &mut v) };
    assert_eq!(st, HdStatus::Invalid);
    assert!(!last_error().is_empty());
    let st = unsafe { hd_jfun_n1(1, ptr::null(), &mut v) };
    assert_eq!(st, HdStatus::NullPointer);
    let raw = [0xffu8, 0];
    let st = unsafe { hd_jfun_n1(1, raw.as_ptr().cast(), &mut v) };
    assert_eq!(st, HdStatus::Utf8);
    // Success clears the message.
    let ok = CString::new("diag:3,1").unwrap();
    assert_eq!(unsafe { hd_jfun_n1(1, ok.as_ptr(), &mut v) }, HdStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe { hd_value_free(v) };
}

#[test]
fn tree_intersection() {
    let mut twice = 0;
    unsafe {
        assert_eq!(hd_tree_intersection(3, 1, 0, 1, -1, &mut twice), HdStatus::Ok);
        assert_eq!(twice, 2);
        assert_eq!(hd_tree_intersection(3, 1, 1, 1, -1, &mut twice), HdStatus::Invalid);
        assert_eq!(
            hd_tree_intersection(3, 1, 0, 1, -1, ptr::null_mut()),
            HdStatus::NullPointer
        );
    }
}

#[test]
fn header_declares_every_symbol() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/hermdens.h")).unwrap();
    for sym in [
        "hd_last_error",
        "hd_version",
        "hd_wdens_n1",
        "hd_jfun_n1",
        "hd_alpha",
        "hd_beta",
        "hd_tree_intersection",
        "hd_value_expr",
        "hd_value_eval",
        "hd_value_eval_f64",
        "hd_value_free",
        "hd_string_free",
        "typedef struct HdValue HdValue",
        "HD_STATUS_BUDGET",
    ] {
        assert!(header.contains(sym), "{sym}");
    }
    let v = unsafe { CStr::from_ptr(hd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/capi-<hash>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_staticlib() {
    let lib = target_dir().join("libhermdens_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include <string.h>
#include "hermdens.h"
int main(void) {
    HdValue *v = NULL, *d = NULL;
    if (hd_wdens_n1("diag:0,-1", 1, 1, &v, &d) != HD_STATUS_OK) return 1;
    char *s = NULL;
    if (hd_value_eval(v, 3, &s) != HD_STATUS_OK) return 2;
    int bad = strcmp(s, "16/243");
    hd_string_free(s);
    hd_value_free(v);
    hd_value_free(d);
    if (hd_jfun_n1(1, "nonsense", &v) != HD_STATUS_INVALID) return 3;
    printf("%s\n", hd_last_error());
    return bad ? 4 : 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!out.stdout.is_empty());
}
