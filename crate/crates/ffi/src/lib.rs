//! C interface to the `mm-pmbm` filter.
//!
//! A filter is created from a TOML run configuration and driven one scan at
//! a time. Every function returns an [`MmPmbmStatus`]; on failure the message
//! is available from [`mm_pmbm_last_error`] on the same thread. Strings
//! returned by the library must be released with [`mm_pmbm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mm_pmbm::config::RunConfig;
use mm_pmbm::metrics::{ospa, OspaParams};
use mm_pmbm::pmbm::snapshot::StateSnapshot;
use mm_pmbm::pmbm::{MmPmbmFilter, ModelConditionedDensity, PmbmState};
use mm_pmbm::Error;
use nalgebra::DVector;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmPmbmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    DimensionMismatch = 4,
    SingularInnovation = 5,
    OutsideRegion = 6,
    Infeasible = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque filter handle.
pub struct MmPmbmFilterHandle {
    filter: MmPmbmFilter,
    state: PmbmState,
    last_estimates: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(err: &Error) -> MmPmbmStatus {
    match err {
        Error::Config { .. } | Error::Parse { .. } | Error::Io { .. } => MmPmbmStatus::Config,
        Error::DimensionMismatch { .. } => MmPmbmStatus::DimensionMismatch,
        Error::SingularInnovation { .. } => MmPmbmStatus::SingularInnovation,
        Error::MeasurementOutsideRegion { .. } => MmPmbmStatus::OutsideRegion,
        Error::Infeasible => MmPmbmStatus::Infeasible,
    }
}

fn fail(status: MmPmbmStatus, message: impl Into<String>) -> MmPmbmStatus {
    set_error(message);
    status
}

fn guard(f: impl FnOnce() -> MmPmbmStatus) -> MmPmbmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(MmPmbmStatus::Ok) => {
            set_error("");
            MmPmbmStatus::Ok
        }
        Ok(status) => status,
        Err(_) => fail(MmPmbmStatus::Panic, "internal panic"),
    }
}

fn from_result(r: mm_pmbm::Result<()>) -> MmPmbmStatus {
    match r {
        Ok(()) => MmPmbmStatus::Ok,
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, MmPmbmStatus> {
    if p.is_null() {
        return Err(fail(MmPmbmStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MmPmbmStatus::InvalidUtf8, "string argument is not valid UTF-8"))
}

unsafe fn points(data: *const f64, count: usize, dim: usize) -> Result<Vec<DVector<f64>>, MmPmbmStatus> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if data.is_null() {
        return Err(fail(MmPmbmStatus::NullPointer, "null point array"));
    }
    let flat = std::slice::from_raw_parts(data, count * dim);
    Ok(flat.chunks_exact(dim).map(DVector::from_column_slice).collect())
}

fn build(cfg: &RunConfig) -> mm_pmbm::Result<MmPmbmFilter> {
    let setup = cfg.filter_setup()?;
    let birth = ModelConditionedDensity::birth(&setup.birth, &cfg.jms.birth_model_dist);
    let meas = cfg.scenario.measurement_model(cfg.scenario.noise_std);
    MmPmbmFilter::new(cfg.jms.clone(), meas, birth, setup.params)
}

/// Creates a filter from a TOML run configuration. The sensor uses the
/// scenario's region, clutter rate and noise level.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mm_pmbm_filter_new(
    config_toml: *const c_char,
    out: *mut *mut MmPmbmFilterHandle,
) -> MmPmbmStatus {
    guard(|| {
        if out.is_null() {
            return fail(MmPmbmStatus::NullPointer, "null output handle");
        }
        *out = ptr::null_mut();
        let text = match str_arg(config_toml) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let filter = match RunConfig::from_toml(text, "config").and_then(|cfg| build(&cfg)) {
            Ok(f) => f,
            Err(e) => return fail(status_of(&e), e.to_string()),
        };
        let state = filter.initial_state();
        *out = Box::into_raw(Box::new(MmPmbmFilterHandle {
            filter,
            state,
            last_estimates: Vec::new(),
        }));
        MmPmbmStatus::Ok
    })
}

/// Releases a filter. Null is ignored.
///
/// # Safety
/// `handle` must come from [`mm_pmbm_filter_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mm_pmbm_filter_free(handle: *mut MmPmbmFilterHandle) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Returns the filter to its empty initial state.
///
/// # Safety
/// `handle` must be a live filter handle.
#[no_mangle]
pub unsafe extern "C" fn mm_pmbm_filter_reset(handle: *mut MmPmbmFilterHandle) -> MmPmbmStatus {
    guard(|| {
        let Some(h) = handle.as_mut() else {
            return fail(MmPmbmStatus::NullPointer, "null filter handle");
        };
        h.state = h.filter.initial_state();
        h.last_estimates.clear();
        MmPmbmStatus::Ok
    })
}

/// Measurement dimension expected by [`mm_pmbm_filter_step`].
///
/// # Safety
/// `handle` must be a live filter handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mm_pmbm_filter_measurement_dim(
    handle: *const MmPmbmFilterHandle,
    out: *mut usize,
) -> MmPmbmStatus {
    guard(|| match (handle.as_ref(), out.is_null()) {
        (Some(h), false) => {
            *out = h.filter.measurement.observation.nrows();
            MmPmbmStatus::Ok
        }
        _ => fail(MmPmbmStatus::NullPointer, "null argument"),
    })
}

/// State dimension of each estimate.
///
/// # Safety
/// `handle` must be a live filter handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mm_pmbm_filter_state_dim(handle: *const MmPmbmFilterHandle, out: *mut usize) -> MmPmbmStatus {
    guard(|| match (handle.as_ref(), out.is_null()) {
        (Some(h), false) => {
            *out = h.filter.jms.state_dim();
            MmPmbmStatus::Ok
        }
        _ => fail(MmPmbmStatus::NullPointer, "null argument"),
    })
}

/// Runs one predict and update cycle. `measurements` holds `count` points
/// stored contiguously, each of the measurement dimension. On error the
/// filter state is left unchanged.
///
/// # Safety
/// `handle` must be a live filter handle; `measurements` must point to
/// `count * measurement_dim` doubles unless `count` is 0.
#[no_mangle]
pub unsafe extern "C" fn mm_pmbm_filter_step(
    handle: *mut MmPmbmFilterHandle,
    measurements: *const f64,
    count: usize,
) -> MmPmbmStatus {
    guard(|| {
        let Some(h) = handle.as_mut() else {
            return fail(MmPmbmStatus::NullPointer, "null filter handle");
        };
        let z = match points(measurements, count, h.filter.measurement.observation.nrows()) {
            Ok(z) => z,
            Err(s) => return s,
        };
        match h.filter.step(&h.state, &z) {
            Ok(next) => {
                h.state = next;
                h.last_estimates = h
                    .filter
                    .estimates(&h.state)
                    .iter()
                    .flat_map(|e| e.state.iter().copied().collect::<Vec<_>>())
                    .collect();
                MmPmbmStatus::Ok
            }
            Err(e) => from_result(Err(e)),
        }
    })
}

/// Copies the current estimates into `out` as `n * state_dim` doubles and
/// stores `n` in `count`. If `capacity` (in doubles) is too small, only
/// `count` is written and `BufferTooSmall` is returned.
///
/// # Safety
/// `handle` must be a live filter handle, `count` a valid pointer and `out`
/// valid for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn mm_pmbm_filter_estimates(
    handle: *const MmPmbmFilterHandle,
    out: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> MmPmbmStatus {
    guard(|| {
        let (Some(h), false) = (handle.as_ref(), count.is_null()) else {
            return fail(MmPmbmStatus::NullPointer, "null argument");
        };
        let d = h.filter.jms.state_dim();
        *count = h.last_estimates.len() / d;
        if h.last_estimates.is_empty() {
            return MmPmbmStatus::Ok;
        }
        if capacity < h.last_estimates.len() {
            return fail(
                MmPmbmStatus::BufferTooSmall,
                format!("need {} doubles, got {capacity}", h.last_estimates.len()),
            );
        }
        if out.is_null() {
            return fail(MmPmbmStatus::NullPointer, "null output buffer");
        }
        ptr::copy_nonoverlapping(h.last_estimates.as_ptr(), out, h.last_estimates.len());
        MmPmbmStatus::Ok
    })
}

/// Serializes the full filter state as JSON. Free the result with
/// [`mm_pmbm_string_free`].
///
/// # Safety
/// `handle` must be a live filter handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mm_pmbm_filter_snapshot_json(
    handle: *const MmPmbmFilterHandle,
    out: *mut *mut c_char,
) -> MmPmbmStatus {
    guard(|| {
        let (Some(h), false) = (handle.as_ref(), out.is_null()) else {
            return fail(MmPmbmStatus::NullPointer, "null argument");
        };
        let json = StateSnapshot::from(&h.state).to_json();
        *out = CString::new(json).unwrap_or_default().into_raw();
        MmPmbmStatus::Ok
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mm_pmbm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// OSPA distance between two point sets of dimension `dim`, each stored
/// contiguously.
///
/// # Safety
/// `x` must hold `nx * dim` doubles and `y` `ny * dim` doubles (either may
/// be null when its count is 0); `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mm_pmbm_ospa(
    x: *const f64,
    nx: usize,
    y: *const f64,
    ny: usize,
    dim: usize,
    cutoff: f64,
    order: f64,
    out: *mut f64,
) -> MmPmbmStatus {
    guard(|| {
        if out.is_null() {
            return fail(MmPmbmStatus::NullPointer, "null output");
        }
        if dim == 0 && nx + ny > 0 {
            return fail(MmPmbmStatus::DimensionMismatch, "point dimension must be positive");
        }
        let (xs, ys) = match (points(x, nx, dim), points(y, ny, dim)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match OspaParams::new(cutoff, order).and_then(|p| ospa(&xs, &ys, &p)) {
            Ok(d) => {
                *out = d;
                MmPmbmStatus::Ok
            }
            Err(e) => from_result(Err(e)),
        }
    })
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mm_pmbm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
