//! C ABI over the ensemble engine.
//!
//! Every entry point returns an [`ApStatus`]. On failure the message is kept
//! per thread and can be copied out with [`ap_last_error`]. Handles are
//! opaque and must be released with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use anderson_pairs::config::RunConfig;
use anderson_pairs::ensemble::{run_ensemble, EnsembleConfig, EnsembleResult};
use anderson_pairs::oracle::oracle_check;
use anderson_pairs::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8, index out of range or a buffer of the wrong length.
    InvalidArgument = 1,
    /// The experiment definition was rejected.
    InvalidConfig = 2,
    /// Memory budget, I/O, or an oracle size beyond its limit.
    Resource = 3,
    /// The oracle disagreed with the closed-form correlations.
    OracleMismatch = 4,
    /// The requested quantity does not exist for this run.
    Unavailable = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

pub struct ApConfig {
    inner: EnsembleConfig,
}

pub struct ApResult {
    inner: EnsembleResult,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: ApStatus, msg: impl Into<String>) -> ApStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn from_error(e: Error) -> ApStatus {
    let status = match e {
        Error::Resource(_) | Error::Io(_) | Error::OracleTooLarge { .. } => ApStatus::Resource,
        Error::OutOfRange { .. } => ApStatus::InvalidArgument,
        _ => ApStatus::InvalidConfig,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> ApStatus) -> ApStatus {
    LAST_ERROR.with(|e| e.borrow_mut().clear());
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        fail(ApStatus::Internal, msg)
    })
}

/// Copies the last error message of this thread into `buf` as a
/// NUL-terminated string, truncating if needed. Returns the full message
/// length in bytes, excluding the terminator; 0 when there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ap_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a TOML run configuration, the same format the CLI reads.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ap_config_from_toml(toml: *const c_char, out: *mut *mut ApConfig) -> ApStatus {
    guard(|| {
        if toml.is_null() || out.is_null() {
            return fail(ApStatus::InvalidArgument, "null pointer");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(toml).to_str() else {
            return fail(ApStatus::InvalidArgument, "configuration is not UTF-8");
        };
        match RunConfig::from_toml_str(text).and_then(|c| c.to_ensemble()) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(ApConfig { inner }));
                ApStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `config` must be null or a handle from [`ap_config_from_toml`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ap_config_free(config: *mut ApConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Overrides the master seed.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ap_config_set_seed(config: *mut ApConfig, seed: u64) -> ApStatus {
    guard(|| match config.as_mut() {
        Some(c) => {
            c.inner.master_seed = seed;
            ApStatus::Ok
        }
        None => fail(ApStatus::InvalidArgument, "null config"),
    })
}

/// Sets the worker thread count; 0 picks the machine default. Results do
/// not depend on it.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ap_config_set_workers(config: *mut ApConfig, workers: usize) -> ApStatus {
    guard(|| match config.as_mut() {
        Some(c) => {
            c.inner.workers = workers;
            ApStatus::Ok
        }
        None => fail(ApStatus::InvalidArgument, "null config"),
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ap_config_set_realizations(config: *mut ApConfig, realizations: usize) -> ApStatus {
    guard(|| match config.as_mut() {
        Some(c) if realizations > 0 => {
            c.inner.realizations = realizations;
            ApStatus::Ok
        }
        Some(_) => fail(ApStatus::InvalidConfig, "at least one realization is required"),
        None => fail(ApStatus::InvalidArgument, "null config"),
    })
}

/// Runs the ensemble. The config handle stays owned by the caller.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ap_run(config: *const ApConfig, out: *mut *mut ApResult) -> ApStatus {
    guard(|| {
        let (Some(c), false) = (config.as_ref(), out.is_null()) else {
            return fail(ApStatus::InvalidArgument, "null pointer");
        };
        *out = ptr::null_mut();
        match run_ensemble(&c.inner) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(ApResult { inner }));
                ApStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `result` must be null or a handle from [`ap_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ap_result_free(result: *mut ApResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of lattice sites, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ap_result_num_sites(result: *const ApResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.config.lattice.num_sites())
}

/// Number of time slices, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ap_result_num_times(result: *const ApResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.slices.len())
}

unsafe fn slice_at<'a>(
    result: *const ApResult,
    index: usize,
) -> Result<&'a anderson_pairs::ensemble::TimeSlice, ApStatus> {
    let r = result
        .as_ref()
        .ok_or_else(|| fail(ApStatus::InvalidArgument, "null result"))?;
    r.inner.slices.get(index).ok_or_else(|| {
        fail(
            ApStatus::InvalidArgument,
            format!("time index {index} out of range ({} slices)", r.inner.slices.len()),
        )
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> ApStatus {
    if buf.is_null() {
        return fail(ApStatus::InvalidArgument, "null buffer");
    }
    if len != src.len() {
        return fail(
            ApStatus::InvalidArgument,
            format!("buffer holds {len} values, need {}", src.len()),
        );
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, len);
    ApStatus::Ok
}

/// # Safety
/// `result` must be a live handle and `time` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ap_result_time(result: *const ApResult, index: usize, time: *mut f64) -> ApStatus {
    guard(|| match slice_at(result, index) {
        Ok(_) if time.is_null() => fail(ApStatus::InvalidArgument, "null output"),
        Ok(s) => {
            *time = s.time;
            ApStatus::Ok
        }
        Err(status) => status,
    })
}

/// Copies the averaged density of slice `index`; `len` must equal the
/// number of sites.
///
/// # Safety
/// `result` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ap_result_density(
    result: *const ApResult,
    index: usize,
    buf: *mut f64,
    len: usize,
) -> ApStatus {
    guard(|| match slice_at(result, index) {
        Ok(s) => copy_out(&s.density, buf, len),
        Err(status) => status,
    })
}

/// Copies the averaged Γ of slice `index` in row-major order; `len` must
/// be sites². Single-particle runs return `Unavailable`.
///
/// # Safety
/// `result` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ap_result_correlation(
    result: *const ApResult,
    index: usize,
    buf: *mut f64,
    len: usize,
) -> ApStatus {
    guard(|| match slice_at(result, index) {
        Ok(s) => match &s.correlation {
            // Γ is symmetric, so nalgebra's column-major storage is also row-major.
            Some(g) => copy_out(g.elements.as_slice(), buf, len),
            None => fail(ApStatus::Unavailable, "single-particle runs have no pair correlation"),
        },
        Err(status) => status,
    })
}

/// Compares the closed-form correlations with exact two-particle evolution
/// on random lattices of `size` sites. `max_error` may be null.
///
/// # Safety
/// `max_error` must be null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ap_oracle_check(size: usize, trials: usize, seed: u64, max_error: *mut f64) -> ApStatus {
    guard(|| match oracle_check(size, trials, seed) {
        Ok(report) => {
            if !max_error.is_null() {
                *max_error = report.max_error();
            }
            if report.passed() {
                ApStatus::Ok
            } else {
                let worst = report.worst.expect("a failed report has a mismatch");
                fail(
                    ApStatus::OracleMismatch,
                    format!(
                        "{} trial {} at t={} element ({}, {}): error {:e}",
                        worst.variant, worst.trial, worst.time, worst.q, worst.r, worst.error
                    ),
                )
            }
        }
        Err(e) => from_error(e),
    })
}
