use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use fibered_dyn_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(fd_last_error()) }.to_string_lossy().into_owned()
}

fn builtin(name: &str) -> *mut FdMap {
    let name = CString::new(name).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { fd_map_builtin(name.as_ptr(), &mut m) }, FdStatus::Ok, "{}", last_error());
    assert!(!m.is_null());
    m
}

#[test]
fn builtin_handles_and_green() {
    let m = builtin("torus");
    let mut d = 0;
    assert_eq!(unsafe { fd_map_degree(m, &mut d) }, FdStatus::Ok);
    assert_eq!(d, 2);
    let mut g = FdGreen::default();
    assert_eq!(unsafe { fd_relative_green(m, 0.5, 0.0, 3.0, 0.0, 1e-9, &mut g) }, FdStatus::Ok);
    assert!((g.value - 3f64.ln()).abs() <= 1e-8);
    assert!(g.truncation_bound <= 1e-9);
    assert_eq!(unsafe { fd_green_theta(m, 2.0, 0.0, 1e-9, &mut g) }, FdStatus::Ok);
    assert!((g.value - 2f64.ln()).abs() <= 1e-8);
    assert_eq!(last_error(), "");
    unsafe { fd_map_free(m) };
    unsafe { fd_map_free(ptr::null_mut()) };
}

#[test]
fn exponents_and_periodic() {
    let m = builtin("cheb_coupled");
    let mut e = FdExponents::default();
    assert_eq!(unsafe { fd_exponents(m, 5000, 3, &mut e) }, FdStatus::Ok);
    let ln2 = 2f64.ln();
    assert!((e.lambda_theta.value - ln2).abs() <= 4.0 * e.lambda_theta.se.max(1e-12));
    assert!(e.lambda_sigma.value >= ln2 - 3.0 * e.lambda_sigma.se);
    assert_eq!(e.lambda_sigma.n, 5000);
    let mut s = 0.0;
    assert_eq!(unsafe { fd_sigma_periodic(m, 4, 1e-9, &mut s) }, FdStatus::Ok);
    assert!((s - e.lambda_sigma.value).abs() < 0.1);
    let mut bj = FdBjReport::default();
    assert_eq!(unsafe { fd_bj_check(m, 5000, 4, 1e-9, &mut bj) }, FdStatus::Ok);
    assert!(bj.discrepancy.abs() <= 4.0 * bj.discrepancy_se);
    unsafe { fd_map_free(m) };
}

#[test]
fn decomposition_rows() {
    let m = builtin("torus");
    let mut rows = [FdDecompRow::default(); FD_DECOMP_ROWS];
    assert_eq!(unsafe { fd_decomposition_check(m, 20_000, 1000, 20, 5, rows.as_mut_ptr()) }, FdStatus::Ok);
    assert_eq!(rows[0].exps, [0, 0, 1]);
    assert!((rows[0].direct.value - 1.0 / 3.0).abs() <= 4.0 * rows[0].direct.se);
    assert!(rows.iter().all(|r| r.combined_se > 0.0));
    assert_eq!(unsafe { fd_decomposition_check(m, 100, 100, 2, 5, ptr::null_mut()) }, FdStatus::NullPointer);
    unsafe { fd_map_free(m) };
}

#[test]
fn json_maps_and_errors() {
    let json = CString::new(
        r#"{"d": 2, "affine": {"p": {"degree": 2, "coeffs": [[-1, 0], [0, 0], [1, 0]]},
            "q": {"degree": 2, "terms": [{"exp": [0, 2], "c": [1, 0]}, {"exp": [1, 0], "c": [0.2, 0]}]}}}"#,
    )
    .unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { fd_map_from_json(json.as_ptr(), &mut m) }, FdStatus::Ok, "{}", last_error());
    unsafe { fd_map_free(m) };

    let degenerate = CString::new(
        r#"{"d": 2, "theta0": {"degree": 2, "coeffs": [[1, 0], [0, 0], [0, 0]]},
            "theta1": {"degree": 2, "coeffs": [[3, 0], [0, 0], [0, 0]]},
            "r": {"degree": 2, "terms": [{"exp": [0, 0, 2], "c": [1, 0]}]}}"#,
    )
    .unwrap();
    let mut m = std::ptr::dangling_mut::<FdMap>();
    assert_eq!(unsafe { fd_map_from_json(degenerate.as_ptr(), &mut m) }, FdStatus::Numerical);
    assert!(m.is_null());
    assert!(last_error().contains("resultant(theta0, theta1)"), "{}", last_error());

    let junk = CString::new("{").unwrap();
    assert_eq!(unsafe { fd_map_from_json(junk.as_ptr(), &mut m) }, FdStatus::InvalidInput);
    assert_eq!(unsafe { fd_map_from_json(ptr::null(), &mut m) }, FdStatus::NullPointer);
    assert_eq!(unsafe { fd_map_builtin(junk.as_ptr(), ptr::null_mut()) }, FdStatus::NullPointer);

    let t = builtin("torus");
    let mut s = 0.0;
    assert_eq!(unsafe { fd_sigma_periodic(t, 40, 1e-9, &mut s) }, FdStatus::InvalidInput);
    assert!(last_error().contains("exceeds cap"), "{}", last_error());
    unsafe { fd_map_free(t) };
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(fd_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Compile the C smoke test against the generated header and static library.
#[test]
fn c_program_links_and_runs() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = exe_dir.join("libfibered_dyn_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
