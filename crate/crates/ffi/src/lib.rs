//! C ABI for the pulse compiler and simulator.
//!
//! Every fallible call returns an [`NhqcStatus`]; on failure the message is
//! available from [`nhqc_last_error`] on the same thread. Schedules are opaque
//! handles owned by the caller and released with [`nhqc_schedule_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nhqc::engine::{propagate_unitary, survival_probability};
use nhqc::gates::target_unitary;
use nhqc::linalg::{fidelity_qubit_subspace, leakage};
use nhqc::pulses::{
    compute_duration, export_tones, read_tones, synthesize, GateSpec, PulseSchedule,
};
use nhqc::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NhqcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    NonConvergent = 4,
    Io = 5,
    Parse = 6,
    BufferTooSmall = 7,
    Internal = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NhqcScheme {
    Holonomic = 0,
    /// `gamma` is ignored and set to −2π·eta.
    Dynamical = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NhqcGateSpec {
    pub theta: f64,
    pub phi: f64,
    pub gamma: f64,
    pub eta: f64,
    pub scheme: NhqcScheme,
}

/// Opaque sampled two-tone pulse schedule.
pub struct NhqcSchedule(PulseSchedule);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> NhqcStatus {
    match e {
        Error::OutOfRange { .. } => NhqcStatus::OutOfRange,
        Error::InvalidArgument(_) | Error::Config { .. } | Error::DimensionMismatch { .. } => {
            NhqcStatus::InvalidArgument
        }
        Error::NonConvergent(_) | Error::TraceDrift(_) | Error::FitFailed(_) => {
            NhqcStatus::NonConvergent
        }
        Error::Io(_) => NhqcStatus::Io,
        Error::Parse { .. } => NhqcStatus::Parse,
        _ => NhqcStatus::Internal,
    }
}

struct Fail(NhqcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(NhqcStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NhqcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NhqcStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            NhqcStatus::Panic
        }
    }
}

unsafe fn spec_from(spec: *const NhqcGateSpec) -> Result<GateSpec, Fail> {
    let s = unsafe { spec.as_ref() }.ok_or_else(|| null("spec"))?;
    Ok(match s.scheme {
        NhqcScheme::Holonomic => GateSpec::holonomic(s.theta, s.phi, s.gamma, s.eta)?,
        NhqcScheme::Dynamical => GateSpec::dynamical(s.theta, s.phi, s.eta)?,
    })
}

unsafe fn schedule_ref<'a>(schedule: *const NhqcSchedule) -> Result<&'a PulseSchedule, Fail> {
    unsafe { schedule.as_ref() }
        .map(|s| &s.0)
        .ok_or_else(|| null("schedule"))
}

unsafe fn path_from<'a>(path: *const c_char) -> Result<&'a str, Fail> {
    if path.is_null() {
        return Err(null("path"));
    }
    unsafe { CStr::from_ptr(path) }
        .to_str()
        .map_err(|_| Fail(NhqcStatus::InvalidArgument, "path is not UTF-8".into()))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    unsafe { out.write(value) };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nhqc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nhqc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Gate duration in seconds for a peak Rabi rate `omega_max` (rad/s).
///
/// # Safety
/// `spec` and `out_duration` must be valid pointers or null.
#[no_mangle]
pub unsafe extern "C" fn nhqc_compute_duration(
    spec: *const NhqcGateSpec,
    omega_max: f64,
    out_duration: *mut f64,
) -> NhqcStatus {
    guard(|| {
        let spec = unsafe { spec_from(spec) }?;
        let t = compute_duration(&spec, omega_max)?;
        unsafe { write(out_duration, t, "out_duration") }
    })
}

/// Synthesize a schedule with `n_samples` uniform intervals.
///
/// # Safety
/// `spec` and `out` must be valid pointers or null. On success `*out` owns a
/// handle that must be released with `nhqc_schedule_free`.
#[no_mangle]
pub unsafe extern "C" fn nhqc_schedule_synthesize(
    spec: *const NhqcGateSpec,
    omega_max: f64,
    n_samples: usize,
    out: *mut *mut NhqcSchedule,
) -> NhqcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = unsafe { spec_from(spec) }?;
        let schedule = synthesize(&spec, omega_max, n_samples)?;
        unsafe { out.write(Box::into_raw(Box::new(NhqcSchedule(schedule)))) };
        Ok(())
    })
}

/// Load a schedule from a tone descriptor file.
///
/// # Safety
/// `path` must be a NUL-terminated string or null; `out` as for
/// `nhqc_schedule_synthesize`.
#[no_mangle]
pub unsafe extern "C" fn nhqc_schedule_read(
    path: *const c_char,
    out: *mut *mut NhqcSchedule,
) -> NhqcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let schedule = read_tones(unsafe { path_from(path) }?)?;
        unsafe { out.write(Box::into_raw(Box::new(NhqcSchedule(schedule)))) };
        Ok(())
    })
}

/// Release a schedule. Null is ignored.
///
/// # Safety
/// `schedule` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nhqc_schedule_free(schedule: *mut NhqcSchedule) {
    if !schedule.is_null() {
        drop(unsafe { Box::from_raw(schedule) });
    }
}

/// Number of samples (n_samples + 1); 0 for null.
///
/// # Safety
/// `schedule` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nhqc_schedule_len(schedule: *const NhqcSchedule) -> usize {
    unsafe { schedule.as_ref() }.map_or(0, |s| s.0.len())
}

/// # Safety
/// `schedule` must be a live handle or null; `out_duration` valid or null.
#[no_mangle]
pub unsafe extern "C" fn nhqc_schedule_duration(
    schedule: *const NhqcSchedule,
    out_duration: *mut f64,
) -> NhqcStatus {
    guard(|| {
        let s = unsafe { schedule_ref(schedule) }?;
        unsafe { write(out_duration, s.duration, "out_duration") }
    })
}

/// Copy sample columns into caller buffers of `capacity` doubles each. Any
/// buffer may be null to skip that column.
///
/// # Safety
/// Each non-null buffer must hold at least `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn nhqc_schedule_copy_samples(
    schedule: *const NhqcSchedule,
    times: *mut f64,
    omega0: *mut f64,
    phi0: *mut f64,
    omega1: *mut f64,
    phi1: *mut f64,
    capacity: usize,
) -> NhqcStatus {
    guard(|| {
        let s = unsafe { schedule_ref(schedule) }?;
        if capacity < s.len() {
            return Err(Fail(
                NhqcStatus::BufferTooSmall,
                format!("need {} samples, buffer holds {capacity}", s.len()),
            ));
        }
        for (dst, src) in [
            (times, &s.times),
            (omega0, &s.omega0),
            (phi0, &s.phi0),
            (omega1, &s.omega1),
            (phi1, &s.phi1),
        ] {
            if !dst.is_null() {
                unsafe { ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len()) };
            }
        }
        Ok(())
    })
}

/// Write the schedule as a tone descriptor file.
///
/// # Safety
/// `schedule` must be a live handle or null; `path` a NUL-terminated string or null.
#[no_mangle]
pub unsafe extern "C" fn nhqc_schedule_export(
    schedule: *const NhqcSchedule,
    path: *const c_char,
) -> NhqcStatus {
    guard(|| {
        let s = unsafe { schedule_ref(schedule) }?;
        export_tones(s, unsafe { path_from(path) }?)?;
        Ok(())
    })
}

/// Propagator under amplitude error `epsilon`, written row-major as 9 real and
/// 9 imaginary parts in basis order (|0⟩, |1⟩, |a⟩).
///
/// # Safety
/// `out_re` and `out_im` must each hold 9 doubles.
#[no_mangle]
pub unsafe extern "C" fn nhqc_propagate(
    schedule: *const NhqcSchedule,
    epsilon: f64,
    steps: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> NhqcStatus {
    guard(|| {
        let s = unsafe { schedule_ref(schedule) }?;
        if out_re.is_null() || out_im.is_null() {
            return Err(null("output buffer"));
        }
        let u = propagate_unitary(s, epsilon, steps)?.propagator;
        for i in 0..3 {
            for j in 0..3 {
                unsafe {
                    out_re.add(3 * i + j).write(u[(i, j)].re);
                    out_im.add(3 * i + j).write(u[(i, j)].im);
                }
            }
        }
        Ok(())
    })
}

/// Qubit-subspace fidelity against the ideal target and leakage out of it.
///
/// # Safety
/// Output pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn nhqc_gate_fidelity(
    schedule: *const NhqcSchedule,
    epsilon: f64,
    steps: usize,
    out_fidelity: *mut f64,
    out_leakage: *mut f64,
) -> NhqcStatus {
    guard(|| {
        let s = unsafe { schedule_ref(schedule) }?;
        if out_fidelity.is_null() || out_leakage.is_null() {
            return Err(null("output pointer"));
        }
        let u = propagate_unitary(s, epsilon, steps)?.propagator;
        let f = fidelity_qubit_subspace(&u, &target_unitary(&s.spec))?;
        let l = leakage(&u)?;
        unsafe {
            out_fidelity.write(f);
            out_leakage.write(l);
        }
        Ok(())
    })
}

/// Overlap of the bright-state image at T/2 with and without error `epsilon`.
///
/// # Safety
/// `out` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn nhqc_survival_probability(
    schedule: *const NhqcSchedule,
    epsilon: f64,
    out: *mut f64,
) -> NhqcStatus {
    guard(|| {
        let s = unsafe { schedule_ref(schedule) }?;
        let p = survival_probability(s, epsilon)?;
        unsafe { write(out, p, "out") }
    })
}
