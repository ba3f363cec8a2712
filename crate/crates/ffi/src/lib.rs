//! C interface to the octd engine.
//!
//! Every fallible call returns an [`OctdStatus`]; on failure the message is
//! available from [`octd_last_error`] on the same thread until the next call.
//! Results are returned through opaque handles that the caller releases with
//! the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use octd_core::classical::{
    fixed_point_catalog, integrate, stability, ClassicalState, Classification, FixedPoint, IntegrateOptions,
};
use octd_core::experiments::{run, RunConfig};
use octd_core::model::{build_lindblad, ModelParams};
use octd_core::observables::{collective_measurements, PhaseObservables};
use octd_core::quantum::{run_ensemble, EnsembleOptions, EnsembleResult, Measurement, TrajectoryConfig};
use octd_core::states::product_state;
use octd_core::OctdError;

/// Status codes; the nonzero values match the command-line exit codes where
/// both exist.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OctdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericFailure = 3,
    Leakage = 4,
    IoFailure = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// Model parameters. `n_max` is the number of Fock levels kept.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct OctdParams {
    pub omega_c: f64,
    pub j: f64,
    pub v: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub spin: f64,
    pub n_max: usize,
}

impl From<&OctdParams> for ModelParams {
    fn from(p: &OctdParams) -> Self {
        ModelParams { omega_c: p.omega_c, j: p.j, v: p.v, lambda: p.lambda, kappa: p.kappa, spin: p.spin, n_max: p.n_max }
    }
}

/// One fixed point: coordinates ordered `x, p, s1x, s1y, s1z, s2x, s2y, s2z`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct OctdFixedPoint {
    /// NUL-terminated label owned by the catalog handle.
    pub label: *const c_char,
    pub exists: bool,
    pub state: [f64; 8],
    pub residual: f64,
    /// -1 when the point does not exist, otherwise the [`OctdStability`] value.
    pub classification: i32,
    pub negative_count: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OctdStability {
    PartialAttractor = 0,
    Attractor = 1,
    Unstable = 2,
    Center = 3,
}

pub struct OctdFixedPoints {
    /// Backing storage for the `label` pointers in `points`.
    _labels: Vec<CString>,
    points: Vec<OctdFixedPoint>,
}

pub struct OctdTrajectory {
    times: Vec<f64>,
    states: Vec<f64>,
}

pub struct OctdEnsemble {
    inner: EnsembleResult,
    labels: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &OctdError) -> OctdStatus {
    match e.exit_code() {
        2 => OctdStatus::InvalidArgument,
        3 => OctdStatus::NumericFailure,
        4 => OctdStatus::Leakage,
        _ => OctdStatus::IoFailure,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (OctdStatus, String)>) -> OctdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OctdStatus::Ok,
        Ok(Err((s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            OctdStatus::Panic
        }
    }
}

fn core<T>(r: octd_core::Result<T>) -> Result<T, (OctdStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (OctdStatus, String) {
    (OctdStatus::NullPointer, "null pointer argument".into())
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, (OctdStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| (OctdStatus::InvalidArgument, "string is not UTF-8".into()))
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next octd call on the same thread.
#[no_mangle]
pub extern "C" fn octd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn octd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Defaults: `omega_c = j = 1`, all couplings zero, `S = 1`, two Fock levels.
#[no_mangle]
pub extern "C" fn octd_params_default() -> OctdParams {
    let p = ModelParams::default();
    OctdParams { omega_c: p.omega_c, j: p.j, v: p.v, lambda: p.lambda, kappa: p.kappa, spin: p.spin, n_max: p.n_max }
}

/// Runs the experiment described by a TOML config (or manifest) into `out_dir`.
///
/// # Safety
/// Both arguments must be valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn octd_run_config(config_path: *const c_char, out_dir: *const c_char) -> OctdStatus {
    guard(|| {
        let cfg = core(RunConfig::load(Path::new(c_str(config_path)?)))?;
        core(run(&cfg, Path::new(c_str(out_dir)?))).map(|_| ())
    })
}

fn fixed_point_row(fp: &FixedPoint, p: &ModelParams, label: &CString) -> octd_core::Result<OctdFixedPoint> {
    let mut row = OctdFixedPoint {
        label: label.as_ptr(),
        exists: fp.exists,
        state: fp.state.to_array(),
        residual: f64::NAN,
        classification: -1,
        negative_count: 0,
    };
    if fp.exists {
        let rep = stability(fp, p)?;
        row.residual = fp.residual(p);
        row.negative_count = rep.negative_count;
        row.classification = match rep.classification {
            Classification::PartialAttractor => OctdStability::PartialAttractor,
            Classification::Attractor => OctdStability::Attractor,
            Classification::Unstable => OctdStability::Unstable,
            Classification::Center => OctdStability::Center,
        } as i32;
    }
    Ok(row)
}

/// Computes the seven-entry fixed-point catalog with stability data.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn octd_fixed_points(params: *const OctdParams, out: *mut *mut OctdFixedPoints) -> OctdStatus {
    guard(|| {
        if params.is_null() || out.is_null() {
            return Err(null());
        }
        let p = ModelParams::from(&*params);
        core(p.validate())?;
        let cat = fixed_point_catalog(&p);
        let labels: Vec<CString> = cat.iter().map(|c| CString::new(c.label.to_string()).unwrap()).collect();
        let points = cat.iter().zip(&labels).map(|(fp, l)| fixed_point_row(fp, &p, l)).collect::<Result<Vec<_>, _>>();
        let points = core(points)?;
        *out = Box::into_raw(Box::new(OctdFixedPoints { _labels: labels, points }));
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`octd_fixed_points`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn octd_fixed_points_len(h: *const OctdFixedPoints) -> usize {
    h.as_ref().map_or(0, |h| h.points.len())
}

/// # Safety
/// `h` must come from [`octd_fixed_points`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn octd_fixed_points_get(
    h: *const OctdFixedPoints,
    index: usize,
    out: *mut OctdFixedPoint,
) -> OctdStatus {
    guard(|| {
        let (h, out) = (h.as_ref().ok_or_else(null)?, out.as_mut().ok_or_else(null)?);
        *out = *h.points.get(index).ok_or((OctdStatus::OutOfRange, format!("index {index} out of range")))?;
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`octd_fixed_points`] or be NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn octd_fixed_points_free(h: *mut OctdFixedPoints) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Integrates the mean-field equations from `initial` (8 coordinates) and
/// samples every `sample_dt` up to `t_end`.
///
/// # Safety
/// `params` must be valid, `initial` must point to 8 doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn octd_classical_integrate(
    params: *const OctdParams,
    initial: *const f64,
    t_end: f64,
    sample_dt: f64,
    out: *mut *mut OctdTrajectory,
) -> OctdStatus {
    guard(|| {
        if params.is_null() || initial.is_null() || out.is_null() {
            return Err(null());
        }
        let p = ModelParams::from(&*params);
        let q0 = ClassicalState::from_array(std::slice::from_raw_parts(initial, 8));
        let traj = core(integrate(&q0, &p, t_end, &IntegrateOptions::sampled_every(sample_dt)))?;
        let states = traj.states.iter().flat_map(|q| q.to_array()).collect();
        *out = Box::into_raw(Box::new(OctdTrajectory { times: traj.times, states }));
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`octd_classical_integrate`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn octd_trajectory_len(h: *const OctdTrajectory) -> usize {
    h.as_ref().map_or(0, |h| h.times.len())
}

/// Sample times, `octd_trajectory_len` values, owned by the handle.
///
/// # Safety
/// `h` must come from [`octd_classical_integrate`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn octd_trajectory_times(h: *const OctdTrajectory) -> *const f64 {
    h.as_ref().map_or(ptr::null(), |h| h.times.as_ptr())
}

/// Row-major states, 8 values per sample, owned by the handle.
///
/// # Safety
/// `h` must come from [`octd_classical_integrate`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn octd_trajectory_states(h: *const OctdTrajectory) -> *const f64 {
    h.as_ref().map_or(ptr::null(), |h| h.states.as_ptr())
}

/// # Safety
/// `h` must come from [`octd_classical_integrate`] or be NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn octd_trajectory_free(h: *mut OctdTrajectory) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Quantum-jump ensemble from the product coherent state at
/// `(x, p, theta1, phi1, theta2, phi2)`, recording the collective and phase
/// observables at `n_samples` uniform times on `[0, t_end]`.
///
/// # Safety
/// `params` must be valid, `angles` must point to 6 doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn octd_quantum_ensemble(
    params: *const OctdParams,
    angles: *const f64,
    t_end: f64,
    n_samples: usize,
    n_traj: usize,
    seed: u64,
    out: *mut *mut OctdEnsemble,
) -> OctdStatus {
    guard(|| {
        if params.is_null() || angles.is_null() || out.is_null() {
            return Err(null());
        }
        let p = ModelParams::from(&*params);
        let a = std::slice::from_raw_parts(angles, 6);
        let spec = core(build_lindblad(&p))?;
        let psi0 = core(product_state(&ClassicalState::from_angles(a[0], a[1], a[2], a[3], a[4], a[5]), &spec.dims))?;
        let coll = core(collective_measurements(&spec.dims))?;
        let phase = PhaseObservables::new(spec.dims);
        let mut ms: Vec<&dyn Measurement> = coll.iter().map(|m| m as &dyn Measurement).collect();
        ms.push(&phase);
        let cfg = TrajectoryConfig::uniform(t_end, n_samples);
        let opts = EnsembleOptions { n_traj, base_seed: seed, ..Default::default() };
        let inner = core(run_ensemble(&psi0, &spec, &cfg, &ms, &opts))?;
        let labels = inner.labels.iter().map(|l| CString::new(l.as_str()).unwrap()).collect();
        *out = Box::into_raw(Box::new(OctdEnsemble { inner, labels }));
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`octd_quantum_ensemble`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn octd_ensemble_samples(h: *const OctdEnsemble) -> usize {
    h.as_ref().map_or(0, |h| h.inner.times.len())
}

/// # Safety
/// `h` must come from [`octd_quantum_ensemble`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn octd_ensemble_times(h: *const OctdEnsemble) -> *const f64 {
    h.as_ref().map_or(ptr::null(), |h| h.inner.times.as_ptr())
}

/// # Safety
/// `h` must come from [`octd_quantum_ensemble`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn octd_ensemble_label_count(h: *const OctdEnsemble) -> usize {
    h.as_ref().map_or(0, |h| h.labels.len())
}

/// Observable label, or NULL when out of range.
///
/// # Safety
/// `h` must come from [`octd_quantum_ensemble`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn octd_ensemble_label(h: *const OctdEnsemble, index: usize) -> *const c_char {
    h.as_ref().and_then(|h| h.labels.get(index)).map_or(ptr::null(), |l| l.as_ptr())
}

/// Ensemble mean and standard error of observable `index`, one value per sample.
///
/// # Safety
/// `h` must come from [`octd_quantum_ensemble`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn octd_ensemble_mean(h: *const OctdEnsemble, index: usize) -> *const f64 {
    h.as_ref().and_then(|h| h.inner.mean.get(index)).map_or(ptr::null(), |v| v.as_ptr())
}

/// # Safety
/// `h` must come from [`octd_quantum_ensemble`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn octd_ensemble_stderr(h: *const OctdEnsemble, index: usize) -> *const f64 {
    h.as_ref().and_then(|h| h.inner.stderr.get(index)).map_or(ptr::null(), |v| v.as_ptr())
}

/// Largest top-Fock-level population seen in any trajectory.
///
/// # Safety
/// `h` must come from [`octd_quantum_ensemble`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn octd_ensemble_max_leakage(h: *const OctdEnsemble) -> f64 {
    h.as_ref().map_or(f64::NAN, |h| h.inner.max_leakage)
}

/// # Safety
/// `h` must come from [`octd_quantum_ensemble`] or be NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn octd_ensemble_free(h: *mut OctdEnsemble) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}
