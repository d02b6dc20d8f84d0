use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use kvgeom_ffi::*;

fn so3() -> *mut KvgAlgebra {
    let name = CString::new("so3").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { kvg_algebra_builtin(name.as_ptr(), &mut h) }, KvgStatus::Ok);
    h
}

const X: [f64; 3] = [0.1, -0.05, 0.2];
const Y: [f64; 3] = [0.03, 0.12, -0.07];

#[test]
fn extracted_pair_satisfies_first_equation() {
    let h = so3();
    let (mut a, mut b, mut r) = ([0.0; 3], [0.0; 3], -1.0);
    unsafe {
        assert_eq!(kvg_algebra_dim(h), 3);
        assert_eq!(kvg_extract_ab(h, X.as_ptr(), Y.as_ptr(), a.as_mut_ptr(), b.as_mut_ptr()), KvgStatus::Ok);
        assert_eq!(kvg_eq1_residual(h, X.as_ptr(), Y.as_ptr(), a.as_ptr(), b.as_ptr(), &mut r), KvgStatus::Ok);
        kvg_algebra_free(h);
    }
    assert!(r < 1e-7, "residual {r}");
}

#[test]
fn phi_at_time_zero_is_the_sum_and_kappa_is_one() {
    let h = so3();
    let (mut z, mut k) = ([0.0; 3], 0.0);
    unsafe {
        assert_eq!(kvg_phi_t(h, 0.0, X.as_ptr(), Y.as_ptr(), z.as_mut_ptr()), KvgStatus::Ok);
        assert_eq!(kvg_kappa_t(h, 0.0, X.as_ptr(), Y.as_ptr(), &mut k), KvgStatus::Ok);
        kvg_algebra_free(h);
    }
    for i in 0..3 {
        assert_eq!(z[i], X[i] + Y[i]);
    }
    assert_eq!(k, 1.0);
}

#[test]
fn errors_carry_status_and_message() {
    let bad = CString::new("e8").unwrap();
    let json = CString::new("{not json").unwrap();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(kvg_algebra_builtin(bad.as_ptr(), &mut h), KvgStatus::InvalidArgument);
        assert!(h.is_null());
        let msg = CStr::from_ptr(kvg_last_error_message()).to_str().unwrap();
        assert!(msg.contains("e8"), "{msg}");
        assert_eq!(kvg_algebra_from_json(json.as_ptr(), &mut h), KvgStatus::Parse);
        assert_eq!(kvg_algebra_builtin(ptr::null(), &mut h), KvgStatus::NullPointer);
        let mut r = 0.0;
        assert_eq!(kvg_kappa_t(ptr::null(), 1.0, X.as_ptr(), Y.as_ptr(), &mut r), KvgStatus::NullPointer);
        assert_eq!(kvg_algebra_dim(ptr::null()), 0);
        kvg_algebra_free(ptr::null_mut());
        kvg_string_free(ptr::null_mut());
    }
}

#[test]
fn far_point_is_reported_outside_domain() {
    let h = so3();
    // A rotation by π has eigenvalue -1, so the principal logarithm does not exist.
    let x = [std::f64::consts::PI, 0.0, 0.0];
    let y = [0.0; 3];
    let mut z = [0.0; 3];
    let s = unsafe { kvg_phi_t(h, 1.0, x.as_ptr(), y.as_ptr(), z.as_mut_ptr()) };
    unsafe { kvg_algebra_free(h) };
    assert_eq!(s, KvgStatus::OutsideDomain);
}

#[test]
fn bch_json_round_trips_and_rejects_bad_degree() {
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(kvg_bch_json(4, KvgOrder::Yx, &mut s), KvgStatus::Ok);
        let text = CStr::from_ptr(s).to_str().unwrap().to_owned();
        kvg_string_free(s);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["order"], "YX");
        assert_eq!(kvg_bch_json(11, KvgOrder::Xy, &mut s), KvgStatus::InvalidArgument);
        assert_eq!(kvg_bch_json(0, KvgOrder::Xy, &mut s), KvgStatus::InvalidArgument);
    }
}

/// Compiles `tests/c/smoke.c` against the generated header and the static
/// library. Skipped when no C compiler is on PATH.
#[test]
fn c_program_links_against_header() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // Test binaries live in <target>/<profile>/deps.
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libkvgeom_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C build failed");
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "smoke exited with {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
