// SPDX-License-Identifier: Apache-2.0

use std::ffi::{CStr, CString};
use std::ptr;

use qdemon_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let n = unsafe { qd_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let msg = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
    assert_eq!(n, msg.len());
    msg
}

fn small_device() -> *mut QdDevice {
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(qd_device_new_default(&mut d), QdStatus::Ok);
        assert_eq!(qd_device_set_n_trunc(d, 8), QdStatus::Ok);
    }
    d
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(qd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_handles_are_reported() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(qd_calibration_pi_amplitude(ptr::null(), &mut out), QdStatus::NullPointer);
        assert!(last_error().contains("calibration"));
        assert_eq!(qd_device_new_default(ptr::null_mut()), QdStatus::NullPointer);
        qd_device_free(ptr::null_mut());
        qd_result_free(ptr::null_mut());
        qd_string_free(ptr::null_mut());
    }
}

#[test]
fn json_round_trip_and_parse_errors() {
    let d = small_device();
    unsafe {
        let mut text = ptr::null_mut();
        assert_eq!(qd_device_to_json(d, &mut text), QdStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(qd_device_from_json(text, &mut back), QdStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(qd_device_to_json(back, &mut again), QdStatus::Ok);
        assert_eq!(CStr::from_ptr(text), CStr::from_ptr(again));
        qd_string_free(text);
        qd_string_free(again);
        qd_device_free(back);

        let bad = CString::new("{\"f_S\": }").unwrap();
        let mut none = ptr::null_mut();
        assert_eq!(qd_device_from_json(bad.as_ptr(), &mut none), QdStatus::Parse);
        assert!(none.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(qd_device_set_n_trunc(d, 0), QdStatus::InvalidArgument);
        assert!(last_error().contains("n_trunc"));
        qd_device_free(d);
    }
}

#[test]
fn success_clears_the_last_error() {
    let mut t = 0.0;
    unsafe {
        assert_eq!(qd_temperature_from_population(0.7, 7.088e9, &mut t), QdStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        assert_eq!(qd_temperature_from_population(0.036, 7.088e9, &mut t), QdStatus::Ok);
        assert_eq!(qd_last_error_message(ptr::null_mut(), 0), 0);
    }
    assert!((t - 0.1035).abs() < 1e-3, "{t}");
}

#[test]
fn formula_helpers() {
    let (mut t_d, mut p) = (0.0, 0.0);
    unsafe {
        assert_eq!(qd_demon_temperature_from_p1(0.007, 7.913e9, &mut t_d), QdStatus::Ok);
        assert_eq!(qd_thermal_prep_probability(f64::INFINITY, 0.1035, 0.92, 7.088e9, &mut p), QdStatus::Ok);
        assert_eq!(qd_thermal_prep_probability(0.05, 0.1035, 0.92, 7.088e9, &mut p), QdStatus::InvalidArgument);
    }
    assert!((0.059..=0.085).contains(&t_d));
}

#[test]
fn scenario_summary_and_series() {
    let d = small_device();
    unsafe {
        let mut cal = ptr::null_mut();
        assert_eq!(qd_calibration_new(d, &mut cal), QdStatus::Ok);
        let mut pi = 0.0;
        assert_eq!(qd_calibration_pi_amplitude(cal, &mut pi), QdStatus::Ok);
        assert!(pi > 0.0);

        let mut r = ptr::null_mut();
        let status = qd_run_scenario(d, cal, QdProtocol::Sequential, QdPrep::Excited, 0.0, 0.0, 0.0, &mut r);
        assert_eq!(status, QdStatus::Ok, "{}", last_error());
        let mut s = QdSummary::default();
        assert_eq!(qd_result_summary(r, &mut s), QdStatus::Ok);
        assert!(s.work > 0.5 && s.work < 1.0, "{s:?}");
        assert!(s.energy_residual.abs() < 1e-3);

        let mut len = 0;
        assert_eq!(qd_result_series(r, QdSeries::Time, ptr::null_mut(), 0, &mut len), QdStatus::BufferTooSmall);
        assert!(len > 100);
        let mut t = vec![0.0; len];
        let mut sz = vec![0.0; len];
        assert_eq!(qd_result_series(r, QdSeries::Time, t.as_mut_ptr(), len, &mut len), QdStatus::Ok);
        assert_eq!(qd_result_series(r, QdSeries::Sz, sz.as_mut_ptr(), len, &mut len), QdStatus::Ok);
        assert_eq!(t[0], 0.0);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!(sz.iter().all(|z| z.abs() <= 1.0 + 1e-9));

        let mut bad = ptr::null_mut();
        let status = qd_run_scenario(d, cal, QdProtocol::Sequential, QdPrep::Thermal, 0.05, 0.0, 0.0, &mut bad);
        assert_eq!(status, QdStatus::InvalidArgument);
        assert!(last_error().contains("below the equilibrium temperature"));
        assert!(bad.is_null());

        qd_result_free(r);
        qd_calibration_free(cal);
        qd_device_free(d);
    }
}
