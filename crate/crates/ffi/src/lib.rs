//! C ABI for the fdx laboratory: opaque handles, integer status codes, and a
//! thread-local last-error message. The header `include/fdx.h` is generated
//! at build time.

use fdx_core::config::ExperimentConfig;
use fdx_core::error::Error;
use fdx_core::experiments::Lab;
use fdx_core::flow::{ds_max, estimate_extinction_time, ExtinctionOptions};
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::ptr;

/// Status codes returned by every fallible call. `fdx_last_error` holds the
/// matching message for the most recent non-Ok return on this thread.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FdxStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    NumericalError = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: FdxStatus, msg: String) -> FdxStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

fn fail_err(err: Error) -> FdxStatus {
    let status = match &err {
        Error::Config(_) => FdxStatus::ConfigError,
        Error::InvalidArgument(_) | Error::InvalidGrid(_) | Error::ShapeMismatch(_) => {
            FdxStatus::InvalidArgument
        }
        _ => FdxStatus::NumericalError,
    };
    fail(status, err.to_string())
}

/// Opaque experiment configuration handle.
pub struct FdxConfig {
    inner: ExperimentConfig,
}

/// Opaque laboratory handle: grid, stationary profile, and leading spectrum.
pub struct FdxLab {
    inner: Lab,
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to
/// `cap`). Returns the full message length in bytes, excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fdx_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Allocates a configuration with default values. Free with `fdx_config_free`.
#[no_mangle]
pub extern "C" fn fdx_config_new() -> *mut FdxConfig {
    Box::into_raw(Box::new(FdxConfig { inner: ExperimentConfig::default() }))
}

/// Sets one configuration key (e.g. "q", "n", "ds") from its string value.
///
/// # Safety
/// `key` and `value` must be valid NUL-terminated strings; `cfg` must come
/// from `fdx_config_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fdx_config_set(
    cfg: *mut FdxConfig,
    key: *const c_char,
    value: *const c_char,
) -> FdxStatus {
    if cfg.is_null() || key.is_null() || value.is_null() {
        return fail(FdxStatus::NullArgument, "null argument to fdx_config_set".into());
    }
    let (key, value) = match (CStr::from_ptr(key).to_str(), CStr::from_ptr(value).to_str()) {
        (Ok(k), Ok(v)) => (k, v),
        _ => return fail(FdxStatus::InvalidArgument, "non-UTF-8 key or value".into()),
    };
    match (*cfg).inner.set(key, value) {
        Ok(()) => FdxStatus::Ok,
        Err(e) => fail_err(e),
    }
}

/// # Safety
/// `cfg` must come from `fdx_config_new` and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn fdx_config_free(cfg: *mut FdxConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Builds the laboratory (grid, stationary profile, leading spectrum) for a
/// configuration. On success `*out` owns the handle; free with `fdx_lab_free`.
///
/// # Safety
/// `cfg` must be a live configuration handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fdx_lab_new(cfg: *const FdxConfig, out: *mut *mut FdxLab) -> FdxStatus {
    if cfg.is_null() || out.is_null() {
        return fail(FdxStatus::NullArgument, "null argument to fdx_lab_new".into());
    }
    match Lab::new(&(*cfg).inner) {
        Ok(lab) => {
            *out = Box::into_raw(Box::new(FdxLab { inner: lab }));
            FdxStatus::Ok
        }
        Err(e) => fail_err(e),
    }
}

/// # Safety
/// `lab` must come from `fdx_lab_new` and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn fdx_lab_free(lab: *mut FdxLab) {
    if !lab.is_null() {
        drop(Box::from_raw(lab));
    }
}

/// Number of interior grid nodes (the length of `fdx_lab_profile` output).
///
/// # Safety
/// `lab` must be a live laboratory handle.
#[no_mangle]
pub unsafe extern "C" fn fdx_lab_grid_size(lab: *const FdxLab, out: *mut usize) -> FdxStatus {
    if lab.is_null() || out.is_null() {
        return fail(FdxStatus::NullArgument, "null argument to fdx_lab_grid_size".into());
    }
    *out = (*lab).inner.grid().n();
    FdxStatus::Ok
}

/// Copies the interior nodal values of the stationary profile into `buf`
/// (capacity `len`, which must be at least the grid size).
///
/// # Safety
/// `lab` must be a live laboratory handle and `buf` must point to at least
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fdx_lab_profile(
    lab: *const FdxLab,
    buf: *mut f64,
    len: usize,
) -> FdxStatus {
    if lab.is_null() || buf.is_null() {
        return fail(FdxStatus::NullArgument, "null argument to fdx_lab_profile".into());
    }
    let values = (*lab).inner.phi.field().values();
    if len < values.len() {
        return fail(
            FdxStatus::InvalidArgument,
            format!("buffer holds {len} values, grid has {}", values.len()),
        );
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    FdxStatus::Ok
}

/// Writes the j-th weighted eigenvalue (1-based) at the profile.
///
/// # Safety
/// `lab` must be a live laboratory handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fdx_lab_eigenvalue(
    lab: *const FdxLab,
    j: usize,
    out: *mut f64,
) -> FdxStatus {
    if lab.is_null() || out.is_null() {
        return fail(FdxStatus::NullArgument, "null argument to fdx_lab_eigenvalue".into());
    }
    let spec = &(*lab).inner.spec;
    if j == 0 || j > spec.len() {
        return fail(
            FdxStatus::InvalidArgument,
            format!("eigenvalue index {j} outside 1..={}", spec.len()),
        );
    }
    *out = spec.mu(j);
    FdxStatus::Ok
}

/// Writes the predicted sharp decay rate 2 nu_2 / (q-1).
///
/// # Safety
/// `lab` must be a live laboratory handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fdx_lab_decay_rate(lab: *const FdxLab, out: *mut f64) -> FdxStatus {
    if lab.is_null() || out.is_null() {
        return fail(FdxStatus::NullArgument, "null argument to fdx_lab_decay_rate".into());
    }
    *out = (*lab).inner.lambda0();
    FdxStatus::Ok
}

/// Estimates the extinction time of `scale` times the stationary profile to
/// relative tolerance `tol`.
///
/// # Safety
/// `lab` must be a live laboratory handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fdx_lab_extinction_time(
    lab: *const FdxLab,
    scale: f64,
    tol: f64,
    out: *mut f64,
) -> FdxStatus {
    if lab.is_null() || out.is_null() {
        return fail(FdxStatus::NullArgument, "null argument to fdx_lab_extinction_time".into());
    }
    let lab = &(*lab).inner;
    if !(scale != 0.0 && scale.is_finite()) {
        return fail(FdxStatus::InvalidArgument, format!("scale must be nonzero, got {scale}"));
    }
    let opts = ExtinctionOptions {
        ds: 5e-3f64.min(0.9 * ds_max(lab.funcs.q())),
        ..Default::default()
    };
    let u0 = lab.phi.field().scaled(scale);
    match estimate_extinction_time(&lab.funcs, &u0, tol, &opts) {
        Ok(t) => {
            *out = t;
            FdxStatus::Ok
        }
        Err(e) => fail_err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn set(cfg: *mut FdxConfig, key: &str, value: &str) -> FdxStatus {
        let k = CString::new(key).unwrap();
        let v = CString::new(value).unwrap();
        unsafe { fdx_config_set(cfg, k.as_ptr(), v.as_ptr()) }
    }

    #[test]
    fn config_lab_roundtrip() {
        let cfg = fdx_config_new();
        assert_eq!(set(cfg, "n", "80"), FdxStatus::Ok);
        assert_eq!(set(cfg, "q", "3.0"), FdxStatus::Ok);
        let mut lab: *mut FdxLab = ptr::null_mut();
        unsafe {
            assert_eq!(fdx_lab_new(cfg, &mut lab), FdxStatus::Ok);
            let mut n = 0usize;
            assert_eq!(fdx_lab_grid_size(lab, &mut n), FdxStatus::Ok);
            assert_eq!(n, 80);
            let mut values = vec![0.0; n];
            assert_eq!(fdx_lab_profile(lab, values.as_mut_ptr(), n), FdxStatus::Ok);
            assert!(values.iter().all(|&v| v > 0.0));
            let mut mu1 = 0.0;
            assert_eq!(fdx_lab_eigenvalue(lab, 1, &mut mu1), FdxStatus::Ok);
            // the profile is the lowest eigenfunction: mu_1 = lambda_q = q/(q-2)...
            // for q = 3, lambda_q = (q-1)/(q-2) = 2
            assert!((mu1 - 2.0).abs() < 1e-6, "mu1 = {mu1}");
            let mut rate = 0.0;
            assert_eq!(fdx_lab_decay_rate(lab, &mut rate), FdxStatus::Ok);
            assert!(rate > 0.0);
            let mut t = 0.0;
            assert_eq!(fdx_lab_extinction_time(lab, 1.0, 1e-3, &mut t), FdxStatus::Ok);
            assert!((t - 1.0).abs() < 5e-3, "t_* = {t}");
            fdx_lab_free(lab);
            fdx_config_free(cfg);
        }
    }

    #[test]
    fn errors_carry_messages() {
        let cfg = fdx_config_new();
        assert_eq!(set(cfg, "qq", "3"), FdxStatus::ConfigError);
        let mut buf = vec![0i8; 128];
        let len = unsafe { fdx_last_error(buf.as_mut_ptr() as *mut c_char, buf.len()) };
        assert!(len > 0);
        let msg = unsafe { CStr::from_ptr(buf.as_ptr() as *const c_char) };
        assert!(msg.to_str().unwrap().contains("unknown key"));
        assert_eq!(set(cfg, "q", "1.0"), FdxStatus::ConfigError);
        unsafe {
            assert_eq!(fdx_lab_new(ptr::null(), ptr::null_mut()), FdxStatus::NullArgument);
            let mut lab: *mut FdxLab = ptr::null_mut();
            // invalid eigenvalue index on a valid lab
            let ok_cfg = fdx_config_new();
            set(ok_cfg, "n", "40");
            assert_eq!(fdx_lab_new(ok_cfg, &mut lab), FdxStatus::Ok);
            let mut x = 0.0;
            assert_eq!(fdx_lab_eigenvalue(lab, 0, &mut x), FdxStatus::InvalidArgument);
            assert_eq!(fdx_lab_eigenvalue(lab, 99, &mut x), FdxStatus::InvalidArgument);
            assert_eq!(fdx_lab_extinction_time(lab, 0.0, 1e-3, &mut x), FdxStatus::InvalidArgument);
            fdx_lab_free(lab);
            fdx_config_free(ok_cfg);
            fdx_config_free(cfg);
        }
    }
}
