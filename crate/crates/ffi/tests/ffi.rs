use std::ffi::{c_char, CStr};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use multibell_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let n = unsafe { mb_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn saturating_strategy_on_states() {
    unsafe {
        let mut singlet = ptr::null_mut();
        assert_eq!(mb_state_singlet(&mut singlet), MbStatus::Ok);
        let mut strat = ptr::null_mut();
        assert_eq!(mb_strategy_saturating(4, &mut strat), MbStatus::Ok);
        assert_eq!(mb_strategy_n(strat), 4);

        let mut value = 0.0;
        let mut factors = [0.0; 4];
        assert_eq!(
            mb_strategy_evaluate(strat, singlet, &mut value, factors.as_mut_ptr(), 4),
            MbStatus::Ok
        );
        assert!((value - 24.0).abs() < 1e-9);
        assert!((factors[3] - 2.0).abs() < 1e-12);

        let mut werner = ptr::null_mut();
        assert_eq!(mb_state_werner(0.9, &mut werner), MbStatus::Ok);
        assert_eq!(
            mb_strategy_evaluate(strat, werner, &mut value, ptr::null_mut(), 0),
            MbStatus::Ok
        );
        assert!((value - 24.0 * 0.9f64.powi(4)).abs() < 1e-9);

        let mut small = [0.0; 2];
        assert_eq!(
            mb_strategy_evaluate(strat, singlet, &mut value, small.as_mut_ptr(), 2),
            MbStatus::BufferTooSmall
        );

        let mut alice = [0.0; 12];
        assert_eq!(mb_strategy_settings(strat, 0, alice.as_mut_ptr(), 12), MbStatus::Ok);
        assert_eq!(&alice[..3], &[1.0, 0.0, 0.0]);
        assert_eq!(mb_strategy_settings(strat, 2, alice.as_mut_ptr(), 12), MbStatus::Domain);

        mb_strategy_free(strat);
        mb_state_free(singlet);
        mb_state_free(werner);
        mb_state_free(ptr::null_mut());
    }
}

#[test]
fn custom_strategy_and_correlator() {
    unsafe {
        let mut s = ptr::null_mut();
        mb_state_singlet(&mut s);
        let z = [0.0, 0.0, 1.0];
        let mut c = 0.0;
        assert_eq!(mb_state_correlator(s, z.as_ptr(), z.as_ptr(), &mut c), MbStatus::Ok);
        assert_eq!(c, -1.0);
        let bad = [0.0, 0.0, 2.0];
        assert_eq!(
            mb_state_correlator(s, bad.as_ptr(), z.as_ptr(), &mut c),
            MbStatus::Domain
        );
        assert_eq!(
            mb_state_correlator(ptr::null(), z.as_ptr(), z.as_ptr(), &mut c),
            MbStatus::NullPointer
        );
        assert!(last_error().contains("state"));

        let alice = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let bob = [-r, r, 0.0, -r, -r, 0.0];
        let mut strat = ptr::null_mut();
        assert_eq!(
            mb_strategy_new(2, alice.as_ptr(), bob.as_ptr(), &mut strat),
            MbStatus::Ok
        );
        let mut v = 0.0;
        assert_eq!(mb_strategy_evaluate(strat, s, &mut v, ptr::null_mut(), 0), MbStatus::Ok);
        assert!((v - 2.0).abs() < 1e-12);
        mb_strategy_free(strat);
        mb_state_free(s);
    }
}

#[test]
fn bounds_and_errors() {
    unsafe {
        let mut k = 0i64;
        assert_eq!(mb_classical_additive(4, &mut k), MbStatus::Ok);
        assert_eq!(k, 8);
        assert_eq!(mb_classical_vertex(4, &mut k), MbStatus::Ok);
        assert_eq!(k, 16);
        assert_eq!(mb_classical_vertex(13, &mut k), MbStatus::Capacity);
        assert!(last_error().contains("13"));

        let (mut ic, mut ln, mut v) = (0usize, 0.0, 0.0);
        assert_eq!(mb_fd_max(7, &mut ic, &mut ln, &mut v), MbStatus::Ok);
        assert_eq!((ic, v), (4, 3072.0));
        assert_eq!(mb_fd_max(1, &mut ic, &mut ln, &mut v), MbStatus::Domain);
        let mut r = 0.0;
        assert_eq!(mb_fd_ratio(255, &mut r), MbStatus::Ok);
        assert!(r.is_finite() && r > 0.72 && r < 0.80);

        assert_eq!(mb_chsh_bound(0.0, 0.0, &mut r), MbStatus::Ok);
        assert!((r - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(mb_chsh_bound(1.5, 0.0, &mut r), MbStatus::Domain);
        let (mut g, mut m) = (0.0, 0.0);
        assert_eq!(mb_b2_bounds(0.7, &mut g, &mut m), MbStatus::Ok);
        assert!((g - (1.0 + 0.51f64.sqrt())).abs() < 1e-15);
        assert!((m - 2.0 * 0.51f64.sqrt()).abs() < 1e-15);
        assert_eq!(mb_b2_bounds(0.7, ptr::null_mut(), &mut m), MbStatus::NullPointer);
        assert_eq!(mb_state_werner(1.5, ptr::null_mut()), MbStatus::Domain);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(mb_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/multibell.h")
}

#[test]
fn header_declares_api() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "typedef struct MbState MbState;",
        "typedef struct MbStrategy MbStrategy;",
        "MB_STATUS_CAPACITY = 3",
        "mb_state_werner(double p, struct MbState **out)",
        "mb_strategy_evaluate(",
        "mb_fd_ratio(size_t n, double *out)",
        "mb_last_error_message(char *buf, size_t len)",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
}

/// Compiles and runs a C client against the static library when a C
/// compiler and the archive are available.
#[test]
fn c_client_links() {
    let target_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let archive = target_dir.join("libmultibell_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !archive.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping C client: no compiler or {} missing", archive.display());
        return;
    }
    let dir = tempfile_dir();
    let src = dir.join("client.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "multibell.h"
int main(void) {
    MbState *s = NULL;
    MbStrategy *st = NULL;
    double v = 0.0;
    if (mb_state_singlet(&s) != MB_STATUS_OK) return 1;
    if (mb_strategy_saturating(5, &st) != MB_STATUS_OK) return 2;
    if (mb_strategy_evaluate(st, s, &v, NULL, 0) != MB_STATUS_OK) return 3;
    printf("%.6f\n", v);
    mb_strategy_free(st);
    mb_state_free(s);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.join("client");
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "120.000000");
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("multibell-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
