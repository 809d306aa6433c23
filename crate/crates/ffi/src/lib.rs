// SPDX-License-Identifier: Apache-2.0

//! C ABI for the qdemon simulator.
//!
//! Objects are opaque handles created by `qd_*_new`/`qd_*_from_*` and
//! released with the matching `qd_*_free`. Every fallible call returns a
//! [`QdStatus`]; on failure the message is available from
//! [`qd_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qdemon::experiment::{run_scenario, Preparation, Protocol, RunOptions, Scenario, ScenarioResult};
use qdemon::sequences::{thermal_prep_probability, Calibration};
use qdemon::thermo::{demon_temperature_from_p1, extracted_power, temperature_from_population};
use qdemon::{DeviceParams, Error};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Calibration = 4,
    Physics = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QdProtocol {
    Sequential = 0,
    Continuous = 1,
}

/// Initial preparation; `Thermal` reads the temperature argument (K,
/// `INFINITY` for the maximally mixed state).
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QdPrep {
    Equilibrium = 0,
    Thermal = 1,
    Superposition = 2,
    Excited = 3,
}

/// Per-step series of a scenario trajectory.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QdSeries {
    /// Seconds.
    Time = 0,
    Sx = 1,
    Sy = 2,
    Sz = 3,
    /// Mean cavity photon number.
    Nbar = 4,
    /// Extracted power in units of hf_S per second.
    Power = 5,
}

/// Scalar outcome of a scenario. Energies are in units of hf_S, entropies in nats.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QdSummary {
    pub nbar: f64,
    pub work: f64,
    pub heat: f64,
    pub delta_u: f64,
    pub energy_residual: f64,
    pub final_pe: f64,
    pub s_s_prep: f64,
    pub s_s_work: f64,
    pub s_d_work: f64,
    pub s_s_reset: f64,
}

/// Device parameters.
pub struct QdDevice(DeviceParams);

/// π-pulse and drive calibration for one device.
pub struct QdCalibration(Calibration);

/// Result of one demon scenario.
pub struct QdResult {
    result: ScenarioResult,
    gamma_b: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> QdStatus {
    match e {
        Error::Json(_) | Error::Config(_) => QdStatus::Parse,
        Error::CalibrationRequired | Error::CalibrationFailed(_) => QdStatus::Calibration,
        Error::Parameter(_)
        | Error::InvalidDimension(_)
        | Error::Shape(_)
        | Error::UnreachableTemperature { .. }
        | Error::NegativeTemperature(_)
        | Error::InconsistentContrast(_)
        | Error::GainDomain { .. } => QdStatus::InvalidArgument,
        _ => QdStatus::Physics,
    }
}

struct Failure(QdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QdStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_error();
            QdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            QdStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(QdStatus::InvalidArgument, format!("{what} is not UTF-8: {e}")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated)
/// and returns the full message length without the terminator. With a null
/// or short buffer only the length is meaningful. Returns 0 when no error is
/// recorded.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn qd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from a `qd_*` function returning an owned string, or be null.
#[no_mangle]
pub unsafe extern "C" fn qd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default device parameters.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qd_device_new_default(out: *mut *mut QdDevice) -> QdStatus {
    guard(|| {
        *out_ptr(out, "out")? = boxed(QdDevice(DeviceParams::default()));
        Ok(())
    })
}

/// Parses device parameters from JSON; every key is required.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qd_device_from_json(json: *const c_char, out: *mut *mut QdDevice) -> QdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let params = DeviceParams::from_json(c_str(json, "json")?)?;
        *out = boxed(QdDevice(params));
        Ok(())
    })
}

/// Serializes the device to JSON; release with [`qd_string_free`].
///
/// # Safety
/// `device` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qd_device_to_json(device: *const QdDevice, out: *mut *mut c_char) -> QdStatus {
    guard(|| {
        let d = deref(device, "device")?;
        let out = out_ptr(out, "out")?;
        let text = CString::new(d.0.to_json()).map_err(|e| Failure(QdStatus::Physics, e.to_string()))?;
        *out = text.into_raw();
        Ok(())
    })
}

/// Sets the cavity truncation (highest Fock level kept).
///
/// # Safety
/// `device` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qd_device_set_n_trunc(device: *mut QdDevice, n_trunc: usize) -> QdStatus {
    guard(|| {
        let d = out_ptr(device, "device")?;
        let candidate = d.0.clone().with_n_trunc(n_trunc);
        candidate.validate()?;
        d.0 = candidate;
        Ok(())
    })
}

/// Switches every dissipative channel off.
///
/// # Safety
/// `device` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qd_device_disable_decoherence(device: *mut QdDevice) -> QdStatus {
    guard(|| {
        let d = out_ptr(device, "device")?;
        d.0 = d.0.clone().without_decoherence();
        Ok(())
    })
}

/// # Safety
/// `device` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qd_device_free(device: *mut QdDevice) {
    if !device.is_null() {
        drop(Box::from_raw(device));
    }
}

/// Calibrates the π-pulse for `device`.
///
/// # Safety
/// `device` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qd_calibration_new(device: *const QdDevice, out: *mut *mut QdCalibration) -> QdStatus {
    guard(|| {
        let d = deref(device, "device")?;
        let out = out_ptr(out, "out")?;
        *out = boxed(QdCalibration(Calibration::calibrated(&d.0)?));
        Ok(())
    })
}

/// Calibrated π-pulse peak Rabi frequency, rad/s.
///
/// # Safety
/// `calibration` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qd_calibration_pi_amplitude(calibration: *const QdCalibration, out: *mut f64) -> QdStatus {
    guard(|| {
        let c = deref(calibration, "calibration")?;
        let out = out_ptr(out, "out")?;
        *out = c.0.pi_amplitude.ok_or(Error::CalibrationRequired)?;
        Ok(())
    })
}

/// # Safety
/// `calibration` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qd_calibration_free(calibration: *mut QdCalibration) {
    if !calibration.is_null() {
        drop(Box::from_raw(calibration));
    }
}

fn preparation(prep: QdPrep, temperature: f64) -> Result<Preparation, Failure> {
    Ok(match prep {
        QdPrep::Equilibrium => Preparation::Equilibrium,
        QdPrep::Superposition => Preparation::Superposition,
        QdPrep::Excited => Preparation::Excited,
        QdPrep::Thermal if temperature > 0.0 => Preparation::thermal(temperature),
        QdPrep::Thermal => {
            return Err(Failure(QdStatus::InvalidArgument, format!("temperature must be positive, got {temperature}")))
        }
    })
}

/// Runs one demon scenario from equilibrium. `fixed_step` > 0 selects the
/// fixed-step integrator; 0 keeps adaptive stepping.
///
/// # Safety
/// `device` and `calibration` must be live handles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qd_run_scenario(
    device: *const QdDevice,
    calibration: *const QdCalibration,
    protocol: QdProtocol,
    prep: QdPrep,
    temperature: f64,
    alpha_in: f64,
    fixed_step: f64,
    out: *mut *mut QdResult,
) -> QdStatus {
    guard(|| {
        let d = deref(device, "device")?;
        let c = deref(calibration, "calibration")?;
        let out = out_ptr(out, "out")?;
        let protocol = match protocol {
            QdProtocol::Sequential => Protocol::Sequential,
            QdProtocol::Continuous => Protocol::Continuous,
        };
        let scenario = Scenario::new(protocol, preparation(prep, temperature)?, alpha_in);
        let opts = RunOptions { fixed_step: (fixed_step > 0.0).then_some(fixed_step), ..Default::default() };
        *out = boxed(QdResult { result: run_scenario(&d.0, &c.0, &scenario, &opts)?, gamma_b: d.0.gamma_b });
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qd_result_summary(result: *const QdResult, out: *mut QdSummary) -> QdStatus {
    guard(|| {
        let r = &deref(result, "result")?.result;
        let out = out_ptr(out, "out")?;
        let e = r.entropies;
        *out = QdSummary {
            nbar: r.nbar,
            work: r.work.work_over_hfs,
            heat: r.work.heat_over_hfs,
            delta_u: r.work.delta_u_over_hfs,
            energy_residual: r.work.energy_residual(),
            final_pe: r.final_pe,
            s_s_prep: e.s_s_prep,
            s_s_work: e.s_s_work,
            s_d_work: e.s_d_work,
            s_s_reset: e.s_s_reset,
        };
        Ok(())
    })
}

/// Copies one trajectory series into `buf`. `len_out` receives the series
/// length; when `capacity` is smaller nothing is copied and
/// `QD_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `result` must be a live handle; `buf` valid for `capacity` doubles or
/// null with `capacity` 0; `len_out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qd_result_series(
    result: *const QdResult,
    series: QdSeries,
    buf: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> QdStatus {
    guard(|| {
        let handle = deref(result, "result")?;
        let r = &handle.result;
        let len_out = out_ptr(len_out, "len_out")?;
        let traj = &r.trajectory;
        let power;
        let data: &[f64] = match series {
            QdSeries::Time => &traj.t,
            QdSeries::Sx => &traj.sx,
            QdSeries::Sy => &traj.sy,
            QdSeries::Sz => &traj.sz,
            QdSeries::Nbar => &traj.nbar,
            QdSeries::Power => {
                power = extracted_power(traj, handle.gamma_b);
                &power.total
            }
        };
        *len_out = data.len();
        if capacity < data.len() {
            return Err(Failure(QdStatus::BufferTooSmall, format!("series has {} points, buffer {capacity}", data.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qd_result_free(result: *mut QdResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Probability of the preparation π-pulse realizing `t_target` from the
/// equilibrium temperature `t0`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qd_thermal_prep_probability(t_target: f64, t0: f64, f_pi: f64, f_s: f64, out: *mut f64) -> QdStatus {
    guard(|| {
        *out_ptr(out, "out")? = thermal_prep_probability(t_target, t0, f_pi, f_s)?;
        Ok(())
    })
}

/// Effective temperature of a two-level system with excited population `p_e`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qd_temperature_from_population(p_e: f64, f: f64, out: *mut f64) -> QdStatus {
    guard(|| {
        *out_ptr(out, "out")? = temperature_from_population(p_e, f)?;
        Ok(())
    })
}

/// Cavity temperature from the one-photon population.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qd_demon_temperature_from_p1(p1: f64, f_d: f64, out: *mut f64) -> QdStatus {
    guard(|| {
        *out_ptr(out, "out")? = demon_temperature_from_p1(p1, f_d)?;
        Ok(())
    })
}
