//! Closed-form steady states and their linear stability.

use std::fmt;

use nalgebra::{DMatrix, SMatrix, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{OctdError, Result};
use crate::model::ModelParams;

use super::{eom_rhs, jacobian, ClassicalState, DIM};

/// Real parts within this band count as zero.
pub const ZERO_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FixedPointLabel {
    Np1,
    Np2Plus,
    Np2Minus,
    Fsr1Plus,
    Fsr1Minus,
    Fsr2Plus,
    Fsr2Minus,
}

impl FixedPointLabel {
    pub const ALL: [FixedPointLabel; 7] = [
        FixedPointLabel::Np1,
        FixedPointLabel::Np2Plus,
        FixedPointLabel::Np2Minus,
        FixedPointLabel::Fsr1Plus,
        FixedPointLabel::Fsr1Minus,
        FixedPointLabel::Fsr2Plus,
        FixedPointLabel::Fsr2Minus,
    ];
}

impl fmt::Display for FixedPointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FixedPointLabel::Np1 => "NP1",
            FixedPointLabel::Np2Plus => "NP2+",
            FixedPointLabel::Np2Minus => "NP2-",
            FixedPointLabel::Fsr1Plus => "FSR1+",
            FixedPointLabel::Fsr1Minus => "FSR1-",
            FixedPointLabel::Fsr2Plus => "FSR2+",
            FixedPointLabel::Fsr2Minus => "FSR2-",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPoint {
    pub label: FixedPointLabel,
    pub state: ClassicalState,
    pub exists: bool,
}

/// The superradiant closed form shared by FSR1 (`φ = 0`) and FSR2 (`φ = π`).
///
/// With `D = κ² + 4ω_c²` and `Δ = 8ω_cλ² - DV`, the spin x-component is
/// `s_x = JD/Δ`, `z² = 1 - J²D²/Δ²`, `x = -8ω_cλz/D` and `p = κx/(2ω_c)`.
/// The sign of `Δ` fixes the sign of `s_x`, so at most one of the two families
/// exists at given couplings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FsrClosedForm {
    pub delta: f64,
    pub sx: f64,
    pub z_abs: f64,
}

impl FsrClosedForm {
    pub fn state(&self, p: &ModelParams, z_sign: f64) -> ClassicalState {
        let d = p.kappa * p.kappa + 4.0 * p.omega_c * p.omega_c;
        let z = z_sign * self.z_abs;
        let x = -8.0 * p.omega_c * p.lambda * z / d;
        let pp = p.kappa * x / (2.0 * p.omega_c);
        let s = [self.sx, 0.0, z];
        ClassicalState { x, p: pp, s1: s, s2: s }
    }
}

pub fn fsr_closed_form(p: &ModelParams) -> Option<FsrClosedForm> {
    let d = p.kappa * p.kappa + 4.0 * p.omega_c * p.omega_c;
    let delta = 8.0 * p.omega_c * p.lambda * p.lambda - d * p.v;
    if delta == 0.0 {
        return None;
    }
    let sx = p.j * d / delta;
    let radicand = 1.0 - sx * sx;
    if !(0.0..=1.0).contains(&radicand) {
        return None;
    }
    Some(FsrClosedForm { delta, sx, z_abs: radicand.sqrt() })
}

const NAN_STATE: ClassicalState =
    ClassicalState { x: f64::NAN, p: f64::NAN, s1: [f64::NAN; 3], s2: [f64::NAN; 3] };

/// All seven labeled candidates with existence flags.
pub fn fixed_point_catalog(p: &ModelParams) -> Vec<FixedPoint> {
    let mut out = Vec::with_capacity(7);
    out.push(FixedPoint {
        label: FixedPointLabel::Np1,
        state: ClassicalState { x: 0.0, p: 0.0, s1: [1.0, 0.0, 0.0], s2: [1.0, 0.0, 0.0] },
        exists: true,
    });

    let ratio = p.j / p.v;
    let np2 = p.v != 0.0 && ratio.abs() <= 1.0;
    for (label, sign) in [(FixedPointLabel::Np2Plus, 1.0), (FixedPointLabel::Np2Minus, -1.0)] {
        let state = if np2 {
            let z = sign * (1.0 - ratio * ratio).sqrt();
            ClassicalState { x: 0.0, p: 0.0, s1: [ratio, 0.0, z], s2: [ratio, 0.0, -z] }
        } else {
            NAN_STATE
        };
        out.push(FixedPoint { label, state, exists: np2 });
    }

    let fsr = fsr_closed_form(p);
    let families = [
        (FixedPointLabel::Fsr1Plus, 1.0, true),
        (FixedPointLabel::Fsr1Minus, -1.0, true),
        (FixedPointLabel::Fsr2Plus, 1.0, false),
        (FixedPointLabel::Fsr2Minus, -1.0, false),
    ];
    for (label, sign, ferro_phase_zero) in families {
        let (state, exists) = match fsr {
            Some(cf) if (cf.delta > 0.0) == ferro_phase_zero => (cf.state(p, sign), true),
            _ => (NAN_STATE, false),
        };
        out.push(FixedPoint { label, state, exists });
    }
    out
}

pub fn catalog_entry(catalog: &[FixedPoint], label: FixedPointLabel) -> &FixedPoint {
    catalog.iter().find(|f| f.label == label).expect("catalog holds every label")
}

impl FixedPoint {
    /// `‖Q̇‖_∞` at the stored state.
    pub fn residual(&self, p: &ModelParams) -> f64 {
        eom_rhs(&self.state, p).to_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    /// Some modes decay, the rest oscillate undamped.
    PartialAttractor,
    /// Every non-constraint mode decays.
    Attractor,
    /// At least one growing mode.
    Unstable,
    /// Every mode oscillates undamped.
    Center,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Classification::PartialAttractor => "partial_attractor",
            Classification::Attractor => "attractor",
            Classification::Unstable => "unstable",
            Classification::Center => "center",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    /// All eight eigenvalues sorted by real part; the two spin-norm null
    /// modes are included as exact zeros.
    pub eigenvalues: Vec<Complex64>,
    /// Spectrum on the tangent space of the two Bloch spheres (six values).
    pub tangent_eigenvalues: Vec<Complex64>,
    pub null_modes: usize,
    pub negative_count: usize,
    pub zero_count: usize,
    pub positive_count: usize,
    pub classification: Classification,
}

fn orthonormal_tangents(s: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let cross = |a: &[f64; 3], b: &[f64; 3]| {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    };
    let norm = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
    let u = [s[0] / norm, s[1] / norm, s[2] / norm];
    let k = (0..3).min_by(|&a, &b| u[a].abs().partial_cmp(&u[b].abs()).unwrap()).unwrap();
    let mut axis = [0.0; 3];
    axis[k] = 1.0;
    let e1 = cross(&u, &axis);
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    let e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
    let e2 = cross(&u, &e1);
    (e1, e2)
}

/// Real Schur eigenvalues. The QR sweep can stall, or return NaN, on some
/// highly symmetric matrices; those are retried after a fixed pseudo-random orthogonal
/// similarity transform, which leaves the spectrum unchanged.
pub(crate) fn eigenvalues_of(m: DMatrix<f64>) -> Vec<Complex64> {
    let n = m.nrows();
    let finite = |s: Schur<f64, nalgebra::Dyn>| {
        let ev: Vec<Complex64> = s.complex_eigenvalues().iter().copied().collect();
        ev.iter().all(|e| e.re.is_finite() && e.im.is_finite()).then_some(ev)
    };
    if let Some(ev) = Schur::try_new(m.clone(), f64::EPSILON, 10_000).and_then(finite) {
        return ev;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..16 {
        let r = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let q = r.qr().q();
        let b = q.transpose() * &m * &q;
        if let Some(ev) = Schur::try_new(b, f64::EPSILON, 10_000).and_then(finite) {
            return ev;
        }
    }
    panic!("Schur decomposition failed to converge");
}

fn sort_spectrum(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
}

/// Linear stability of a fixed point.
///
/// The Jacobian is evaluated in the eight Cartesian coordinates. Its image
/// lies in the tangent space of the two unit spheres, so the spectrum is the
/// six eigenvalues of the Jacobian restricted to that space plus two exact
/// zeros along the spin-norm directions; the latter are excluded from the
/// classification.
pub fn stability(fp: &FixedPoint, p: &ModelParams) -> Result<StabilityReport> {
    if !fp.exists {
        return Err(OctdError::MissingFixedPoint(fp.label.to_string()));
    }
    Ok(stability_at(&fp.state, p))
}

pub(crate) fn stability_at(q: &ClassicalState, p: &ModelParams) -> StabilityReport {
    let jac = SMatrix::<f64, DIM, DIM>::from_fn(|r, c| jacobian(q, p)[r][c]);
    let (t1a, t1b) = orthonormal_tangents(&q.s1);
    let (t2a, t2b) = orthonormal_tangents(&q.s2);
    let mut basis = SMatrix::<f64, DIM, 6>::zeros();
    basis[(0, 0)] = 1.0;
    basis[(1, 1)] = 1.0;
    for k in 0..3 {
        basis[(2 + k, 2)] = t1a[k];
        basis[(2 + k, 3)] = t1b[k];
        basis[(5 + k, 4)] = t2a[k];
        basis[(5 + k, 5)] = t2b[k];
    }
    let reduced = basis.transpose() * jac * basis;
    let reduced = DMatrix::from_fn(6, 6, |r, c| reduced[(r, c)]);
    let mut tangent = eigenvalues_of(reduced);
    sort_spectrum(&mut tangent);

    let negative_count = tangent.iter().filter(|e| e.re < -ZERO_TOL).count();
    let positive_count = tangent.iter().filter(|e| e.re > ZERO_TOL).count();
    let null_modes = 2;
    let zero_count = tangent.len() - negative_count - positive_count + null_modes;
    let classification = if positive_count > 0 {
        Classification::Unstable
    } else if negative_count == 0 {
        Classification::Center
    } else if zero_count == null_modes {
        Classification::Attractor
    } else {
        Classification::PartialAttractor
    };

    let mut eigenvalues = tangent.clone();
    eigenvalues.extend([Complex64::new(0.0, 0.0); 2]);
    sort_spectrum(&mut eigenvalues);
    StabilityReport {
        eigenvalues,
        tangent_eigenvalues: tangent,
        null_modes,
        negative_count,
        zero_count,
        positive_count,
        classification,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::eom_rhs_into;

    fn fd_spectrum(q: &ClassicalState, p: &ModelParams) -> Vec<Complex64> {
        let base = q.to_array();
        let h = 1e-6;
        let m = DMatrix::from_fn(DIM, DIM, |r, c| {
            let (mut a, mut b) = (base, base);
            a[c] += h;
            b[c] -= h;
            let (mut fa, mut fb) = ([0.0; DIM], [0.0; DIM]);
            eom_rhs_into(&a, p, &mut fa);
            eom_rhs_into(&b, p, &mut fb);
            (fa[r] - fb[r]) / (2.0 * h)
        });
        let mut v = eigenvalues_of(m);
        sort_spectrum(&mut v);
        v
    }

    fn spectra_match(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        let mut used = vec![false; b.len()];
        a.iter().all(|x| {
            let hit = (0..b.len()).filter(|&k| !used[k]).find(|&k| (b[k] - x).norm() < tol);
            hit.map(|k| used[k] = true).is_some()
        })
    }

    #[test]
    fn np2_closed_form() {
        let p = ModelParams::new(2.0, 0.3, 0.1);
        let cat = fixed_point_catalog(&p);
        let np2 = catalog_entry(&cat, FixedPointLabel::Np2Plus);
        assert!(np2.exists);
        assert!((np2.state.s1[2] - 0.866_025_403_784_438_6).abs() < 1e-12);
        assert!((np2.state.s2[2] + 0.866_025_403_784_438_6).abs() < 1e-12);
        let absent = fixed_point_catalog(&ModelParams::new(0.5, 0.3, 0.1));
        assert!(!catalog_entry(&absent, FixedPointLabel::Np2Plus).exists);
        assert!(!catalog_entry(&absent, FixedPointLabel::Np2Minus).exists);
    }

    #[test]
    fn fsr1_closed_form_is_a_root() {
        let p = ModelParams::new(0.5, 1.3, 0.3);
        let cat = fixed_point_catalog(&p);
        let fsr = catalog_entry(&cat, FixedPointLabel::Fsr1Plus);
        assert!(fsr.exists);
        assert!(!catalog_entry(&cat, FixedPointLabel::Fsr2Plus).exists);
        // D = 4.09, Δ = 13.52 - 2.045
        let d: f64 = 4.09;
        let delta = 8.0 * 1.69 - d * 0.5;
        let sx = d / delta;
        let z = (1.0 - sx * sx).sqrt();
        assert!((fsr.state.s1[0] - sx).abs() < 1e-14);
        assert!((fsr.state.z1() - z).abs() < 1e-14);
        assert!((fsr.state.x + 8.0 * 1.3 * z / d).abs() < 1e-14);
        assert!((fsr.state.p - 0.3 * fsr.state.x / 2.0).abs() < 1e-14);
        assert!(fsr.residual(&p) < 1e-10);
        assert!(fsr.state.phi1().abs() < 1e-15);
    }

    #[test]
    fn fsr2_has_opposite_spin_x_and_phase_pi() {
        let p = ModelParams::new(1.4, 0.2, 0.1);
        let cat = fixed_point_catalog(&p);
        let f2 = catalog_entry(&cat, FixedPointLabel::Fsr2Plus);
        assert!(f2.exists && !catalog_entry(&cat, FixedPointLabel::Fsr1Plus).exists);
        assert!(f2.state.s1[0] < 0.0);
        assert!((f2.state.phi1().abs() - std::f64::consts::PI).abs() < 1e-15);
        assert!(f2.residual(&p) < 1e-12);
    }

    #[test]
    fn every_existing_entry_is_stationary() {
        for &v in &[0.0, 0.3, 0.9, 1.0, 1.5, 2.5] {
            for &l in &[0.0, 0.1, 0.4, 0.8, 1.3, 2.0] {
                for &k in &[0.0, 0.1, 0.3] {
                    let p = ModelParams::new(v, l, k);
                    for fp in fixed_point_catalog(&p).iter().filter(|f| f.exists) {
                        assert!(fp.residual(&p) < 1e-10, "{} at V={v} λ={l} κ={k}", fp.label);
                    }
                }
            }
        }
    }

    #[test]
    fn region_classifications() {
        let np1 = |v, l, k| {
            let p = ModelParams::new(v, l, k);
            stability(&fixed_point_catalog(&p)[0], &p).unwrap()
        };
        assert_eq!(np1(0.5, 0.5, 0.3).classification, Classification::PartialAttractor);
        assert_eq!(np1(1.5, 0.5, 0.1).classification, Classification::Unstable);
        assert_eq!(np1(0.5, 0.5, 0.0).classification, Classification::Center);
    }

    #[test]
    fn spectrum_matches_finite_difference_jacobian() {
        for &(v, l, k) in &[(0.5, 0.5, 0.3), (1.8, 0.2, 0.3), (0.5, 1.3, 0.3), (2.0, 0.2, 0.0)] {
            let p = ModelParams::new(v, l, k);
            for fp in fixed_point_catalog(&p).iter().filter(|f| f.exists) {
                let rep = stability(fp, &p).unwrap();
                assert_eq!(rep.eigenvalues.len(), 8);
                assert_eq!(rep.negative_count + rep.zero_count + rep.positive_count, 8);
                let fd = fd_spectrum(&fp.state, &p);
                assert!(spectra_match(&rep.eigenvalues, &fd, 1e-6), "{} {:?} vs {:?}", fp.label, rep.eigenvalues, fd);
            }
        }
    }

    #[test]
    fn missing_point_is_an_error() {
        let p = ModelParams::new(0.5, 0.1, 0.1);
        let np2 = fixed_point_catalog(&p)[1];
        assert!(matches!(stability(&np2, &p), Err(OctdError::MissingFixedPoint(_))));
    }
}
