//! C ABI over the `racsim` library.
//!
//! Every function returns a [`RacsimStatus`]; results go through out
//! pointers. On failure a message is stored per thread and can be read with
//! [`racsim_last_error`]. Handles are opaque and must be released with their
//! `_free` function; strings returned by the library are released with
//! [`racsim_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use racsim::bounds::{self, BoundParams};
use racsim::env::{AcbVector, ClassConfig};
use racsim::harness::{self, MetricSeries, Scenario};
use racsim::linalg::{CMatrix, CVector, C64};
use racsim::rl::{self, UtilityParams};
use racsim::saud::{self, RecoveryConfig};
use racsim::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RacsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Dimension = 4,
    Infeasible = 5,
    Io = 6,
    Json = 7,
    Panic = 8,
    Other = 9,
}

/// A parsed, validated scenario.
pub struct RacsimScenario {
    inner: Scenario,
}

/// The metric series of one run.
pub struct RacsimSeries {
    inner: MetricSeries,
}

/// One slot of a series.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RacsimRecord {
    pub slot: usize,
    pub utility: f64,
    pub n_permitted: f64,
    pub n_valid: usize,
    pub accuracy: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> RacsimStatus {
    match err {
        Error::InvalidConfig(_) | Error::InvalidCurve(_) | Error::SearchTooLarge(_) => RacsimStatus::InvalidConfig,
        Error::Dimension(_) | Error::Layer { .. } => RacsimStatus::Dimension,
        Error::Infeasible(_) => RacsimStatus::Infeasible,
        Error::Io { .. } => RacsimStatus::Io,
        Error::Json(_) => RacsimStatus::Json,
        Error::MissingCache | Error::Artifact(_) => RacsimStatus::Other,
    }
}

enum Failure {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RacsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RacsimStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer: {name}"));
            RacsimStatus::NullPointer
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg);
            RacsimStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            RacsimStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &'static str) -> Result<*const T, Failure> {
    if p.is_null() {
        Err(Failure::Null(name))
    } else {
        Ok(p)
    }
}

fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: caller guarantees a valid, writable location when non-null.
    unsafe { p.as_mut() }.ok_or(Failure::Null(name))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn read_str<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    non_null(p, name)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Arg(format!("{name} is not valid UTF-8")))
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::Arg("string contains a NUL byte".into()))
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn racsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn racsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn racsim_scenario_from_json(json: *const c_char, out_scenario: *mut *mut RacsimScenario) -> RacsimStatus {
    guard(|| {
        let slot = out(out_scenario, "out_scenario")?;
        *slot = ptr::null_mut();
        let text = read_str(json, "json")?;
        let inner: Scenario = serde_json::from_str(text).map_err(Error::from)?;
        inner.validate()?;
        *slot = Box::into_raw(Box::new(RacsimScenario { inner }));
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from [`racsim_scenario_from_json`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn racsim_scenario_free(scenario: *mut RacsimScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs a scenario to completion.
///
/// # Safety
/// `scenario` must be a live handle; `out_series` must be writable.
#[no_mangle]
pub unsafe extern "C" fn racsim_run(scenario: *const RacsimScenario, out_series: *mut *mut RacsimSeries) -> RacsimStatus {
    guard(|| {
        let slot = out(out_series, "out_series")?;
        *slot = ptr::null_mut();
        let s = &*non_null(scenario, "scenario")?;
        let inner = harness::run(&s.inner)?;
        *slot = Box::into_raw(Box::new(RacsimSeries { inner }));
        Ok(())
    })
}

/// # Safety
/// `series` must come from [`racsim_run`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn racsim_series_free(series: *mut RacsimSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// # Safety
/// `series` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn racsim_series_len(series: *const RacsimSeries, out_len: *mut usize) -> RacsimStatus {
    guard(|| {
        let len = out(out_len, "out_len")?;
        *len = (*non_null(series, "series")?).inner.records.len();
        Ok(())
    })
}

/// # Safety
/// `series` must be a live handle; `out_record` must be writable.
#[no_mangle]
pub unsafe extern "C" fn racsim_series_record(
    series: *const RacsimSeries,
    index: usize,
    out_record: *mut RacsimRecord,
) -> RacsimStatus {
    guard(|| {
        let dst = out(out_record, "out_record")?;
        let s = &*non_null(series, "series")?;
        let r = s
            .inner
            .records
            .get(index)
            .ok_or_else(|| Failure::Arg(format!("index {index} out of range ({} records)", s.inner.records.len())))?;
        *dst = RacsimRecord {
            slot: r.slot,
            utility: r.utility,
            n_permitted: r.n_permitted,
            n_valid: r.n_valid,
            accuracy: r.accuracy,
        };
        Ok(())
    })
}

/// Mean utility over the last quarter of the series.
///
/// # Safety
/// `series` must be a live handle; `out_utility` must be writable.
#[no_mangle]
pub unsafe extern "C" fn racsim_series_steady_utility(series: *const RacsimSeries, out_utility: *mut f64) -> RacsimStatus {
    guard(|| {
        let dst = out(out_utility, "out_utility")?;
        *dst = harness::steady_state(&(*non_null(series, "series")?).inner)?.utility;
        Ok(())
    })
}

/// Full series as JSON; release with [`racsim_string_free`].
///
/// # Safety
/// `series` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn racsim_series_to_json(series: *const RacsimSeries, out_json: *mut *mut c_char) -> RacsimStatus {
    guard(|| {
        let dst = out(out_json, "out_json")?;
        *dst = ptr::null_mut();
        let s = &*non_null(series, "series")?;
        *dst = to_c_string(serde_json::to_string(&s.inner).map_err(Error::from)?)?;
        Ok(())
    })
}

/// Sparsity-adaptive matching pursuit on one measurement.
///
/// `h_re`/`h_im` hold the `m x n` normalized sensing matrix in row-major
/// order, `y_re`/`y_im` the length-`m` measurement. `noise_floor` is an
/// absolute residual stopping level (0 for noiseless data) and
/// `max_support` caps the support size (0 means no cap beyond the solver's
/// own). `out_indicator` receives `n` bytes, 1 for detected users.
///
/// # Safety
/// All arrays must have the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn racsim_samp_recover(
    h_re: *const f64,
    h_im: *const f64,
    m: usize,
    n: usize,
    y_re: *const f64,
    y_im: *const f64,
    step_size: usize,
    max_support: usize,
    noise_floor: f64,
    out_indicator: *mut u8,
) -> RacsimStatus {
    guard(|| {
        if m == 0 || n == 0 {
            return Err(Failure::Arg("m and n must be positive".into()));
        }
        let len = m.checked_mul(n).ok_or_else(|| Failure::Arg("m * n overflows".into()))?;
        let hr = slice(h_re, len, "h_re")?;
        let hi = slice(h_im, len, "h_im")?;
        let yr = slice(y_re, m, "y_re")?;
        let yi = slice(y_im, m, "y_im")?;
        non_null(out_indicator, "out_indicator")?;
        let h = CMatrix::from_fn(m, n, |i, j| C64::new(hr[i * n + j], hi[i * n + j]));
        let y = CVector::from_fn(m, |i, _| C64::new(yr[i], yi[i]));
        let cfg = RecoveryConfig {
            step_size,
            max_support: (max_support > 0).then_some(max_support),
            noise_floor,
            ..RecoveryConfig::default()
        };
        cfg.validate(m)?;
        let est = saud::samp_recover(&h, &y, &cfg);
        let dst = std::slice::from_raw_parts_mut(out_indicator, n);
        for (d, e) in dst.iter_mut().zip(est) {
            *d = u8::from(e);
        }
        Ok(())
    })
}

/// `1 - |truth - estimate|_1 / n` over 0/1 byte vectors.
///
/// # Safety
/// Both arrays must hold `n` bytes.
#[no_mangle]
pub unsafe extern "C" fn racsim_detection_accuracy(
    truth: *const u8,
    estimate: *const u8,
    n: usize,
    out_accuracy: *mut f64,
) -> RacsimStatus {
    guard(|| {
        let dst = out(out_accuracy, "out_accuracy")?;
        let t: Vec<bool> = slice(truth, n, "truth")?.iter().map(|&b| b != 0).collect();
        let e: Vec<bool> = slice(estimate, n, "estimate")?.iter().map(|&b| b != 0).collect();
        *dst = saud::detection_accuracy(&t, &e)?;
        Ok(())
    })
}

/// System utility of one slot for `n_classes` classes.
///
/// # Safety
/// `p`, `scores` and `counts` must each hold `n_classes` values.
#[no_mangle]
pub unsafe extern "C" fn racsim_utility(
    accuracy: f64,
    p: *const f64,
    scores: *const f64,
    counts: *const f64,
    n_classes: usize,
    rho1: f64,
    rho2: f64,
    out_utility: *mut f64,
) -> RacsimStatus {
    guard(|| {
        let dst = out(out_utility, "out_utility")?;
        if n_classes == 0 {
            return Err(Failure::Arg("n_classes must be positive".into()));
        }
        let p = AcbVector::new(slice(p, n_classes, "p")?.to_vec())?;
        let classes: Vec<ClassConfig> = slice(scores, n_classes, "scores")?
            .iter()
            .map(|&r| ClassConfig {
                n_members: 0,
                priority_score: r,
                activation_prob: 0.0,
            })
            .collect();
        let counts = slice(counts, n_classes, "counts")?;
        let params = UtilityParams { rho1, rho2 };
        params.validate()?;
        *dst = rl::utility(accuracy, &p, &classes, counts, &params);
        Ok(())
    })
}

fn params(n_users: usize, n_antennas: usize, phi: f64, a1: f64, a2: f64) -> Result<BoundParams, Failure> {
    let p = BoundParams {
        a1,
        a2,
        ..BoundParams::new(n_users, n_antennas, phi)
    };
    p.validate()?;
    Ok(p)
}

/// # Safety
/// `out_epsilon` must be writable.
#[no_mangle]
pub unsafe extern "C" fn racsim_epsilon_n(n_users: usize, n_antennas: usize, phi: f64, out_epsilon: *mut f64) -> RacsimStatus {
    guard(|| {
        let dst = out(out_epsilon, "out_epsilon")?;
        *dst = bounds::epsilon_n(&params(n_users, n_antennas, phi, 1.0, 1.0)?);
        Ok(())
    })
}

/// Largest tolerable sparsity; `Infeasible` when none exists.
///
/// # Safety
/// `out_sparsity` must be writable.
#[no_mangle]
pub unsafe extern "C" fn racsim_max_sparsity(
    n_users: usize,
    n_antennas: usize,
    phi: f64,
    out_sparsity: *mut f64,
) -> RacsimStatus {
    guard(|| {
        let dst = out(out_sparsity, "out_sparsity")?;
        *dst = bounds::max_sparsity(&params(n_users, n_antennas, phi, 1.0, 1.0)?)?.max_sparsity;
        Ok(())
    })
}

/// Detection-accuracy lower bound at a sparsity level.
///
/// # Safety
/// `out_bound` must be writable.
#[no_mangle]
pub unsafe extern "C" fn racsim_theorem1_bound(
    sparsity: f64,
    n_users: usize,
    n_antennas: usize,
    phi: f64,
    a1: f64,
    a2: f64,
    out_bound: *mut f64,
) -> RacsimStatus {
    guard(|| {
        let dst = out(out_bound, "out_bound")?;
        if !(sparsity >= 0.0 && sparsity < n_users as f64) {
            return Err(Failure::Arg(format!("sparsity {sparsity} outside [0, {n_users})")));
        }
        *dst = bounds::theorem1_bound(sparsity, &params(n_users, n_antennas, phi, a1, a2)?);
        Ok(())
    })
}
