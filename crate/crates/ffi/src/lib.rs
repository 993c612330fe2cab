//! C ABI over `fibered-dyn`.
//!
//! Maps are opaque handles created by [`fd_map_builtin`] or
//! [`fd_map_from_json`] and released with [`fd_map_free`]. Every fallible
//! call returns an [`FdStatus`]; on failure [`fd_last_error`] describes the
//! error on the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fibered_dyn::algebra::C64;
use fibered_dyn::geometry::{builtin, FiberedMap, ValidatedMap, P2};
use fibered_dyn::green::{green_theta, relative_green, GreenValue};
use fibered_dyn::lyapunov::{bj_check, exponents, sigma_periodic_approx, Exponent};
use fibered_dyn::sampling::{decomposition_check, derive_seed, sample_base, sample_equilibrium, Estimate};
use fibered_dyn::Error;

/// Status codes; the numbering follows the command-line exit codes where they overlap.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Bad input: unknown name, malformed JSON, invalid argument.
    InvalidInput = 2,
    /// Validation failure, non-convergence, degenerate fiber.
    Numerical = 3,
    /// A Rust panic was caught.
    Panic = 4,
}

/// A validated fibered map.
pub struct FdMap {
    map: ValidatedMap,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FdGreen {
    pub value: f64,
    pub truncation_bound: f64,
    pub iterations: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FdEstimate {
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FdExponents {
    pub lambda_theta: FdEstimate,
    pub lambda_sigma: FdEstimate,
    pub lambda_f: FdEstimate,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FdBjReport {
    pub direct: FdEstimate,
    pub formula: FdEstimate,
    pub discrepancy: f64,
    pub discrepancy_se: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FdDecompRow {
    pub exps: [u32; 3],
    pub direct: FdEstimate,
    pub nested: FdEstimate,
    pub combined_se: f64,
    pub passed: bool,
}

/// Rows written by [`fd_decomposition_check`].
pub const FD_DECOMP_ROWS: usize = 6;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FdStatus {
    if e.is_numerical() {
        FdStatus::Numerical
    } else {
        FdStatus::InvalidInput
    }
}

fn guard(f: impl FnOnce() -> Result<(), (FdStatus, String)>) -> FdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FdStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&msg);
            FdStatus::Panic
        }
    }
}

fn lib<T>(r: fibered_dyn::Result<T>) -> Result<T, (FdStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (FdStatus, String) {
    (FdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (FdStatus, String)> {
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

unsafe fn map_ref<'a>(p: *const FdMap) -> Result<&'a ValidatedMap, (FdStatus, String)> {
    unsafe { p.as_ref() }.map(|m| &m.map).ok_or_else(|| null("map"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (FdStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| (FdStatus::InvalidInput, format!("{what} is not UTF-8")))
}

fn store(map: FiberedMap, out: &mut *mut FdMap) -> Result<(), (FdStatus, String)> {
    let map = lib(map.validated())?;
    *out = Box::into_raw(Box::new(FdMap { map }));
    Ok(())
}

fn estimate(e: Estimate) -> FdEstimate {
    FdEstimate { value: e.value, se: e.se, n: e.n }
}

fn exponent(e: &Exponent) -> FdEstimate {
    FdEstimate { value: e.value, se: e.se, n: e.n }
}

fn green(g: GreenValue) -> FdGreen {
    FdGreen { value: g.value, truncation_bound: g.truncation_bound, iterations: g.iterations_used }
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn fd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static.
#[no_mangle]
pub extern "C" fn fd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Built-in map by name (`torus`, `chebyshev`, `basilica_base`, `cheb_coupled`, `desboves`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_map_builtin(name: *const c_char, out: *mut *mut FdMap) -> FdStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        *out = ptr::null_mut();
        let name = unsafe { str_arg(name, "name") }?;
        store(lib(builtin(name))?, out)
    })
}

/// Map from its JSON form (`{"d", "theta0", "theta1", "r"}` or `{"d", "affine"}`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_map_from_json(json: *const c_char, out: *mut *mut FdMap) -> FdStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        *out = ptr::null_mut();
        let json = unsafe { str_arg(json, "json") }?;
        let map: FiberedMap = serde_json::from_str(json).map_err(|e| (FdStatus::InvalidInput, e.to_string()))?;
        store(map, out)
    })
}

/// Release a handle; null is ignored.
///
/// # Safety
/// `map` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fd_map_free(map: *mut FdMap) {
    if !map.is_null() {
        drop(unsafe { Box::from_raw(map) });
    }
}

/// # Safety
/// `map` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_map_degree(map: *const FdMap, out: *mut usize) -> FdStatus {
    guard(|| {
        let m = unsafe { map_ref(map) }?;
        *unsafe { out_ref(out, "out") }? = m.d();
        Ok(())
    })
}

/// Relative Green function at the affine point `(t, z)`.
///
/// # Safety
/// `map` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_relative_green(
    map: *const FdMap,
    t_re: f64,
    t_im: f64,
    z_re: f64,
    z_im: f64,
    tol: f64,
    out: *mut FdGreen,
) -> FdStatus {
    guard(|| {
        let m = unsafe { map_ref(map) }?;
        let out = unsafe { out_ref(out, "out") }?;
        let x = P2::from_affine(C64::new(t_re, t_im), C64::new(z_re, z_im));
        *out = green(lib(relative_green(m, &x, tol))?);
        Ok(())
    })
}

/// Green function of the base at `(t, 1)`.
///
/// # Safety
/// `map` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_green_theta(
    map: *const FdMap,
    t_re: f64,
    t_im: f64,
    tol: f64,
    out: *mut FdGreen,
) -> FdStatus {
    guard(|| {
        let m = unsafe { map_ref(map) }?;
        let out = unsafe { out_ref(out, "out") }?;
        *out = green(lib(green_theta(m, &[C64::new(t_re, t_im), C64::new(1.0, 0.0)], tol))?);
        Ok(())
    })
}

/// Lyapunov exponents from `samples` points of `μ_f` and `μ_θ`.
///
/// # Safety
/// `map` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_exponents(map: *const FdMap, samples: usize, seed: u64, out: *mut FdExponents) -> FdStatus {
    guard(|| {
        let m = unsafe { map_ref(map) }?;
        let out = unsafe { out_ref(out, "out") }?;
        let f = lib(sample_equilibrium(m, samples, derive_seed(seed, 0)))?;
        let theta = lib(sample_base(m, samples, derive_seed(seed, 1)))?;
        let r = lib(exponents(m, &f, &theta))?;
        *out = FdExponents {
            lambda_theta: exponent(&r.lambda_theta),
            lambda_sigma: exponent(&r.lambda_sigma),
            lambda_f: exponent(&r.lambda_f),
        };
        Ok(())
    })
}

/// Direct sectional exponent against the pairing formula.
///
/// # Safety
/// `map` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_bj_check(
    map: *const FdMap,
    samples: usize,
    seed: u64,
    tol: f64,
    out: *mut FdBjReport,
) -> FdStatus {
    guard(|| {
        let m = unsafe { map_ref(map) }?;
        let out = unsafe { out_ref(out, "out") }?;
        let r = lib(bj_check(m, samples, seed, tol))?;
        *out = FdBjReport {
            direct: estimate(r.lambda_sigma_direct),
            formula: estimate(r.lambda_sigma_formula),
            discrepancy: r.discrepancy,
            discrepancy_se: r.discrepancy_se,
        };
        Ok(())
    })
}

/// Periodic-fiber approximation of the sectional exponent at period `n`.
///
/// # Safety
/// `map` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_sigma_periodic(map: *const FdMap, n: usize, tol: f64, out: *mut f64) -> FdStatus {
    guard(|| {
        let m = unsafe { map_ref(map) }?;
        let out = unsafe { out_ref(out, "out") }?;
        *out = lib(sigma_periodic_approx(m, n, tol))?.value;
        Ok(())
    })
}

/// Direct against nested integrals of the six P² test functions; writes
/// [`FD_DECOMP_ROWS`] rows.
///
/// # Safety
/// `map` must be a live handle; `rows` must hold `FD_DECOMP_ROWS` entries.
#[no_mangle]
pub unsafe extern "C" fn fd_decomposition_check(
    map: *const FdMap,
    direct_samples: usize,
    base_samples: usize,
    fiber_samples: usize,
    seed: u64,
    rows: *mut FdDecompRow,
) -> FdStatus {
    guard(|| {
        let m = unsafe { map_ref(map) }?;
        if rows.is_null() {
            return Err(null("rows"));
        }
        let r = lib(decomposition_check(m, direct_samples, base_samples, fiber_samples, seed))?;
        let out = unsafe { std::slice::from_raw_parts_mut(rows, FD_DECOMP_ROWS) };
        for (o, row) in out.iter_mut().zip(&r.rows) {
            *o = FdDecompRow {
                exps: row.exps,
                direct: estimate(row.direct),
                nested: estimate(row.nested),
                combined_se: row.combined_se,
                passed: row.passed,
            };
        }
        Ok(())
    })
}
