use std::ffi::{CStr, CString};
use std::ptr;

use octd_ffi::*;

fn params(v: f64, lambda: f64, kappa: f64) -> OctdParams {
    OctdParams { v, lambda, kappa, ..octd_params_default() }
}

fn last_error() -> String {
    let p = octd_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn fixed_point_catalog_round_trip() {
    let p = params(0.5, 0.5, 0.3);
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { octd_fixed_points(&p, &mut h) }, OctdStatus::Ok);
    assert_eq!(unsafe { octd_fixed_points_len(h) }, 7);
    let mut labels = Vec::new();
    for i in 0..7 {
        let mut fp = std::mem::MaybeUninit::<OctdFixedPoint>::uninit();
        assert_eq!(unsafe { octd_fixed_points_get(h, i, fp.as_mut_ptr()) }, OctdStatus::Ok);
        let fp = unsafe { fp.assume_init() };
        labels.push(unsafe { CStr::from_ptr(fp.label) }.to_str().unwrap().to_string());
        if fp.exists {
            assert!(fp.residual < 1e-10);
            assert!(fp.classification >= 0);
        } else {
            assert_eq!(fp.classification, -1);
        }
    }
    assert_eq!(labels[0], "NP1");
    let mut fp = std::mem::MaybeUninit::<OctdFixedPoint>::uninit();
    assert_eq!(unsafe { octd_fixed_points_get(h, 7, fp.as_mut_ptr()) }, OctdStatus::OutOfRange);
    assert!(last_error().contains("out of range"));
    unsafe { octd_fixed_points_free(h) };
}

#[test]
fn invalid_params_set_error_message() {
    let p = params(0.5, 0.5, -1.0);
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { octd_fixed_points(&p, &mut h) }, OctdStatus::InvalidArgument);
    assert!(h.is_null());
    assert!(last_error().contains("kappa"));
    assert_eq!(unsafe { octd_fixed_points(ptr::null(), &mut h) }, OctdStatus::NullPointer);
}

#[test]
fn classical_trajectory_handle() {
    let p = params(1.8, 0.2, 0.3);
    let q0 = [0.1, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { octd_classical_integrate(&p, q0.as_ptr(), 2.0, 0.5, &mut h) }, OctdStatus::Ok);
    let n = unsafe { octd_trajectory_len(h) };
    assert_eq!(n, 5);
    let times = unsafe { std::slice::from_raw_parts(octd_trajectory_times(h), n) };
    let states = unsafe { std::slice::from_raw_parts(octd_trajectory_states(h), 8 * n) };
    assert_eq!(times[4], 2.0);
    assert_eq!(&states[..8], &q0);
    for k in 0..n {
        let s1 = &states[8 * k + 2..8 * k + 5];
        assert!((s1.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-9);
    }
    unsafe { octd_trajectory_free(h) };
    unsafe { octd_trajectory_free(ptr::null_mut()) };
}

#[test]
fn quantum_ensemble_handle() {
    let p = OctdParams { spin: 0.5, n_max: 6, ..params(1.0, 0.3, 0.5) };
    let angles = [0.3, 0.0, 1.0, 0.5, 2.0, -1.2];
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { octd_quantum_ensemble(&p, angles.as_ptr(), 1.0, 3, 4, 7, &mut h) }, OctdStatus::Ok);
    assert_eq!(unsafe { octd_ensemble_samples(h) }, 3);
    let labels: Vec<String> = (0..unsafe { octd_ensemble_label_count(h) })
        .map(|i| unsafe { CStr::from_ptr(octd_ensemble_label(h, i)) }.to_str().unwrap().to_string())
        .collect();
    let n = labels.iter().position(|l| l == "n").unwrap();
    let mean = unsafe { std::slice::from_raw_parts(octd_ensemble_mean(h, n), 3) };
    // coherent photon number S(x² + p²)/2
    assert!((mean[0] - 0.0225).abs() < 1e-9, "{mean:?}");
    assert!(unsafe { octd_ensemble_label(h, 99) }.is_null());
    assert!(unsafe { octd_ensemble_max_leakage(h) } < 1e-3);
    unsafe { octd_ensemble_free(h) };
}

#[test]
fn run_config_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "experiment = \"fixed-points\"\n[params]\nv = 1.0\nlambda = 0.5\nkappa = 0.3\nspin = 1.0\nn_max = 4\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let (c, o) = (CString::new(cfg.to_str().unwrap()).unwrap(), CString::new(out.to_str().unwrap()).unwrap());
    assert_eq!(unsafe { octd_run_config(c.as_ptr(), o.as_ptr()) }, OctdStatus::Ok);
    assert!(out.join("manifest.json").exists());
    let missing = CString::new("/nonexistent/run.toml").unwrap();
    assert_eq!(unsafe { octd_run_config(missing.as_ptr(), o.as_ptr()) }, OctdStatus::IoFailure);
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/octd.h");
    let text = std::fs::read_to_string(header).unwrap();
    for sym in ["octd_fixed_points_free", "octd_quantum_ensemble", "OCTD_STABILITY_CENTER", "octd_last_error"] {
        assert!(text.contains(sym), "{sym}");
    }
    let Ok(status) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).status() else {
        return;
    };
    assert!(status.success());
}
