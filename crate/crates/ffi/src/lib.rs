//! C ABI over the `ptwell` solver.
//!
//! Every fallible function returns a [`PtwStatus`]. On failure the message is
//! kept per thread and can be read with [`ptw_last_error_message`]. Spectra are
//! returned as opaque handles that the caller releases with
//! [`ptw_spectrum_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ptwell::continuation::{classify_levels, find_exceptional, Parameter};
use ptwell::error::Error;
use ptwell::model::{scale_params, PhysicalParams, ScaledParams};
use ptwell::oracle::{oracle_spectrum, GridSpec};
use ptwell::secular::secular_det_r;
use ptwell::spectrum::{default_r_max, scan_roots, Spectrum, Stability};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtwStatus {
    Ok = 0,
    InvalidArgument = 1,
    NumericFailure = 2,
    NullPointer = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtwStability {
    Unknown = 0,
    Robust = 1,
    Fragile = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtwParameter {
    Z = 0,
    Lambda = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtwRoot {
    pub index: usize,
    pub r: f64,
    pub sigma: f64,
    pub tau: f64,
    pub energy: f64,
    pub residual: f64,
    pub stability: PtwStability,
    /// NaN unless the level is fragile.
    pub critical_z: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtwExceptional {
    pub lambda: f64,
    pub z: f64,
    pub r_double: f64,
    pub residual_value: f64,
    pub residual_derivative: f64,
    /// -1 when the pair is real below the critical value, +1 above.
    pub real_side: f64,
    pub iterations: usize,
}

/// Opaque list of real roots.
pub struct PtwSpectrum {
    inner: Spectrum,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: PtwStatus, msg: impl Into<String>) -> PtwStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> PtwStatus {
    let s = if e.is_input_error() { PtwStatus::InvalidArgument } else { PtwStatus::NumericFailure };
    fail(s, e.to_string())
}

fn guard(f: impl FnOnce() -> PtwStatus) -> PtwStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(PtwStatus::Panic, msg)
        }
    }
}

fn stability(s: Stability) -> PtwStability {
    match s {
        Stability::Robust => PtwStability::Robust,
        Stability::Fragile => PtwStability::Fragile,
        Stability::Unknown => PtwStability::Unknown,
    }
}

fn resolve_r_max(r_max: f64, lambda: f64) -> Result<f64, PtwStatus> {
    if r_max == 0.0 {
        return Ok(default_r_max(lambda));
    }
    if r_max > 0.0 && r_max.is_finite() {
        Ok(r_max)
    } else {
        Err(fail(PtwStatus::InvalidArgument, format!("r_max must be positive, got {r_max}")))
    }
}

fn store_spectrum(spec: Spectrum, out: *mut *mut PtwSpectrum) -> PtwStatus {
    // SAFETY: `out` was checked for null by the caller.
    unsafe { *out = Box::into_raw(Box::new(PtwSpectrum { inner: spec })) };
    PtwStatus::Ok
}

/// Message for the last failure on this thread, or null. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ptw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ptw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Real roots for scaled parameters. `r_max = 0` selects the default window.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn ptw_spectrum_scan(
    lambda: f64,
    z: f64,
    scale: f64,
    r_max: f64,
    out: *mut *mut PtwSpectrum,
) -> PtwStatus {
    guard(|| {
        if out.is_null() {
            return fail(PtwStatus::NullPointer, "out is null");
        }
        let p = match ScaledParams::new(lambda, z, scale) {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        let r_max = match resolve_r_max(r_max, lambda) {
            Ok(r) => r,
            Err(s) => return s,
        };
        store_spectrum(scan_roots(&p, r_max), out)
    })
}

/// As [`ptw_spectrum_scan`] from the well half-width `L`, step `ell` and height `g`.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn ptw_spectrum_scan_physical(
    l: f64,
    ell: f64,
    g: f64,
    r_max: f64,
    out: *mut *mut PtwSpectrum,
) -> PtwStatus {
    guard(|| {
        if out.is_null() {
            return fail(PtwStatus::NullPointer, "out is null");
        }
        let p = match PhysicalParams::new(l, ell, g).and_then(|p| scale_params(&p)) {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        let r_max = match resolve_r_max(r_max, p.lambda) {
            Ok(r) => r,
            Err(s) => return s,
        };
        store_spectrum(scan_roots(&p, r_max), out)
    })
}

/// Real roots with robust/fragile flags from continuation in `Z` up to `z_cap`.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn ptw_classify(
    lambda: f64,
    z: f64,
    z_cap: f64,
    r_max: f64,
    out: *mut *mut PtwSpectrum,
) -> PtwStatus {
    guard(|| {
        if out.is_null() {
            return fail(PtwStatus::NullPointer, "out is null");
        }
        let p = match ScaledParams::unit(lambda, z) {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        let r_max = match resolve_r_max(r_max, lambda) {
            Ok(r) => r,
            Err(s) => return s,
        };
        match classify_levels(&p, z_cap, r_max) {
            Ok(s) => store_spectrum(s, out),
            Err(e) => from_error(e),
        }
    })
}

/// Number of roots; 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ptw_spectrum_len(s: *const PtwSpectrum) -> usize {
    s.as_ref().map_or(0, |s| s.inner.roots.len())
}

/// Copies root `i` (0-based) into `out`.
///
/// # Safety
/// `s` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn ptw_spectrum_root(s: *const PtwSpectrum, i: usize, out: *mut PtwRoot) -> PtwStatus {
    guard(|| {
        let (Some(s), false) = (s.as_ref(), out.is_null()) else {
            return fail(PtwStatus::NullPointer, "null handle or output");
        };
        let Some(r) = s.inner.roots.get(i) else {
            return fail(PtwStatus::InvalidArgument, format!("root {i} out of range (len {})", s.inner.roots.len()));
        };
        *out = PtwRoot {
            index: r.index,
            r: r.r,
            sigma: r.sigma,
            tau: r.tau,
            energy: r.energy,
            residual: r.residual,
            stability: stability(r.stability),
            critical_z: r.critical_z.unwrap_or(f64::NAN),
        };
        PtwStatus::Ok
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ptw_spectrum_free(s: *mut PtwSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Scaled secular function at `R` for unit scale.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn ptw_secular_det(lambda: f64, z: f64, r: f64, out: *mut f64) -> PtwStatus {
    guard(|| {
        if out.is_null() {
            return fail(PtwStatus::NullPointer, "out is null");
        }
        let p = match ScaledParams::unit(lambda, z) {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        if !(r >= 0.0 && r.is_finite()) {
            return fail(PtwStatus::InvalidArgument, format!("R must be >= 0, got {r}"));
        }
        *out = secular_det_r(r, &p);
        PtwStatus::Ok
    })
}

/// Newton search for a double real root starting at `(lambda, z, r_hint)`.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn ptw_find_exceptional(
    lambda: f64,
    z: f64,
    r_hint: f64,
    free: PtwParameter,
    out: *mut PtwExceptional,
) -> PtwStatus {
    guard(|| {
        if out.is_null() {
            return fail(PtwStatus::NullPointer, "out is null");
        }
        let p = match ScaledParams::unit(lambda, z) {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        let free = match free {
            PtwParameter::Z => Parameter::Z,
            PtwParameter::Lambda => Parameter::Lambda,
        };
        match find_exceptional(&p, r_hint, free) {
            Ok(ep) => {
                *out = PtwExceptional {
                    lambda: ep.lambda,
                    z: ep.z,
                    r_double: ep.r_double,
                    residual_value: ep.residual_value,
                    residual_derivative: ep.residual_derivative,
                    real_side: ep.real_side,
                    iterations: ep.iterations,
                };
                PtwStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Finite-difference eigenvalues below `e_max` on `n` nodes, with Richardson
/// extrapolation when `extrapolate` is nonzero. Writes at most `cap` values to
/// `buf` and the total count to `len`; `buf` may be null when `cap` is 0.
///
/// # Safety
/// `buf` must hold `cap` doubles and `len` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn ptw_oracle_eigenvalues(
    l: f64,
    ell: f64,
    g: f64,
    n: usize,
    e_max: f64,
    extrapolate: i32,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> PtwStatus {
    guard(|| {
        if len.is_null() || (buf.is_null() && cap > 0) {
            return fail(PtwStatus::NullPointer, "null output buffer");
        }
        let run = || -> Result<Vec<f64>, Error> {
            let p = PhysicalParams::new(l, ell, g)?;
            let mut grid = GridSpec::new(n, e_max)?;
            if extrapolate != 0 {
                grid = grid.with_halving();
            }
            let o = oracle_spectrum(&p, &grid)?;
            Ok(o.extrapolated.unwrap_or(o.eigenvalues))
        };
        match run() {
            Ok(v) => {
                *len = v.len();
                for (i, &e) in v.iter().take(cap).enumerate() {
                    *buf.add(i) = e;
                }
                PtwStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
