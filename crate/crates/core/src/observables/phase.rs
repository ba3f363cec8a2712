//! Discrete (Pegg-Barnett type) phase states of a spin and the joint phase
//! distribution of the two spins.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{OctdError, Result};
use crate::operators::{HilbertDims, Slot, Spin, C64, ZERO};
use crate::quantum::Measurement;

use super::{reduce, StateRef};

/// Phase grid `φ_m = -π + 2πm/(2S+1)` and the unitary taking `Sz`
/// amplitudes to phase amplitudes.
///
/// `|φ_m⟩ = Σ_n e^{-i n φ_m} |S, n⟩ / √(2S+1)`. The sign makes a spin coherent
/// state with azimuth `φ` peak at `φ_m ≈ φ`.
#[derive(Clone, Debug)]
pub struct PhaseBasis {
    pub spin: Spin,
    pub phases: Vec<f64>,
    /// Row `m` is `⟨φ_m|`.
    pub transform: DMatrix<C64>,
}

impl PhaseBasis {
    pub fn new(spin: Spin) -> Self {
        let d = spin.dim();
        let s = spin.value();
        let phases: Vec<f64> = (0..d).map(|m| -PI + 2.0 * PI * m as f64 / d as f64).collect();
        let norm = 1.0 / (d as f64).sqrt();
        let transform = DMatrix::from_fn(d, d, |m, k| C64::from_polar(norm, (k as f64 - s) * phases[m]));
        Self { spin, phases, transform }
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    /// `|φ_m⟩` in the `Sz` basis.
    pub fn state(&self, m: usize) -> Vec<C64> {
        self.transform.row(m).iter().map(|v| v.conj()).collect()
    }
}

/// `p(φ_m1, φ_m2)` indexed `[(m1, m2)]`.
#[derive(Clone, Debug)]
pub struct PhaseDistribution {
    pub phases: Vec<f64>,
    pub p: DMatrix<f64>,
}

/// Arithmetic moments of the joint phase distribution.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseMoments {
    pub phi_plus: f64,
    pub var_phi_plus: f64,
    pub phi_minus: f64,
    pub var_phi_minus: f64,
    pub phi1: f64,
    pub var_phi1: f64,
    pub phi2: f64,
    pub var_phi2: f64,
}

/// Joint phase distribution of a two-spin state (photon already traced out).
pub fn phase_distribution(rho_s: &DMatrix<C64>, basis: &PhaseBasis) -> Result<PhaseDistribution> {
    let d = basis.dim();
    if rho_s.nrows() != d * d || rho_s.ncols() != d * d {
        return Err(OctdError::DimensionMismatch { expected: d * d, found: rho_s.nrows() });
    }
    let u = basis.transform.kronecker(&basis.transform);
    let rotated = &u * rho_s * u.adjoint();
    let p = DMatrix::from_fn(d, d, |m1, m2| rotated[(m1 * d + m2, m1 * d + m2)].re);
    Ok(PhaseDistribution { phases: basis.phases.clone(), p })
}

pub fn phase_moments(dist: &PhaseDistribution) -> PhaseMoments {
    let ph = &dist.phases;
    let d = ph.len();
    let mean = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
        let mut acc = 0.0;
        for m1 in 0..d {
            for m2 in 0..d {
                acc += f(ph[m1], ph[m2]) * dist.p[(m1, m2)];
            }
        }
        acc
    };
    let phi_plus = mean(&|a, b| 0.5 * (a + b));
    let phi_minus = mean(&|a, b| 0.5 * (a - b));
    let phi1 = mean(&|a, _| a);
    let phi2 = mean(&|_, b| b);
    PhaseMoments {
        phi_plus,
        var_phi_plus: mean(&|a, b| (0.5 * (a + b) - phi_plus).powi(2)),
        phi_minus,
        var_phi_minus: mean(&|a, b| (0.5 * (a - b) - phi_minus).powi(2)),
        phi1,
        var_phi1: mean(&|a, _| (a - phi1).powi(2)),
        phi2,
        var_phi2: mean(&|_, b| (b - phi2).powi(2)),
    }
}

/// Phase-diagonal readouts usable inside trajectory ensembles.
///
/// Labels: `phi_plus`, `phi_plus_sq`, `phi_minus`, `phi_minus_sq`, `phi1`,
/// `phi1_sq`. Each is the expectation of an operator diagonal in the phase
/// basis, so ensemble means combine into variances as `⟨A²⟩ - ⟨A⟩²`.
pub struct PhaseObservables {
    pub dims: HilbertDims,
    pub basis: PhaseBasis,
}

impl PhaseObservables {
    pub fn new(dims: HilbertDims) -> Self {
        Self { dims, basis: PhaseBasis::new(dims.spin) }
    }

    fn push_from(&self, p: &DMatrix<f64>, out: &mut Vec<f64>) {
        let dist = PhaseDistribution { phases: self.basis.phases.clone(), p: p.clone() };
        let m = phase_moments(&dist);
        out.extend_from_slice(&[
            m.phi_plus,
            m.var_phi_plus + m.phi_plus * m.phi_plus,
            m.phi_minus,
            m.var_phi_minus + m.phi_minus * m.phi_minus,
            m.phi1,
            m.var_phi1 + m.phi1 * m.phi1,
        ]);
    }

    /// Joint phase distribution of a pure state, via the slot-wise transform.
    pub fn distribution_pure(&self, psi: &[C64]) -> DMatrix<f64> {
        let d = self.basis.dim();
        let nf = self.dims.fock_cutoff;
        let u = &self.basis.transform;
        // a[m1][i2][n] = Σ_i1 U[m1,i1] ψ[i1][i2][n]
        let mut a = vec![ZERO; d * d * nf];
        for m1 in 0..d {
            for i1 in 0..d {
                let w = u[(m1, i1)];
                let src = &psi[i1 * d * nf..(i1 + 1) * d * nf];
                let dst = &mut a[m1 * d * nf..(m1 + 1) * d * nf];
                dst.iter_mut().zip(src).for_each(|(o, v)| *o += w * v);
            }
        }
        let mut p = DMatrix::from_element(d, d, 0.0);
        let mut row = vec![ZERO; nf];
        for m1 in 0..d {
            for m2 in 0..d {
                row.iter_mut().for_each(|r| *r = ZERO);
                for i2 in 0..d {
                    let w = u[(m2, i2)];
                    let src = &a[(m1 * d + i2) * nf..(m1 * d + i2 + 1) * nf];
                    row.iter_mut().zip(src).for_each(|(o, v)| *o += w * v);
                }
                p[(m1, m2)] = row.iter().map(|v| v.norm_sqr()).sum();
            }
        }
        p
    }
}

impl Measurement for PhaseObservables {
    fn labels(&self) -> Vec<String> {
        ["phi_plus", "phi_plus_sq", "phi_minus", "phi_minus_sq", "phi1", "phi1_sq"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn measure_pure(&self, psi: &[C64], out: &mut Vec<f64>) {
        let p = self.distribution_pure(psi);
        self.push_from(&p, out);
    }

    fn measure_rho(&self, rho: &DMatrix<C64>, out: &mut Vec<f64>) {
        let rs = reduce(StateRef::Mixed(rho), &self.dims, &[Slot::Spin1, Slot::Spin2]).expect("dims checked by caller");
        let dist = phase_distribution(&rs, &self.basis).expect("reduced state has two-spin dimension");
        self.push_from(&dist.p, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::ClassicalState;
    use crate::states::{inner, product_state};

    fn spin(s: f64) -> Spin {
        Spin::new(s).unwrap()
    }

    #[test]
    fn phase_states_are_orthonormal_and_complete() {
        for s in [0.5, 3.0, 6.0] {
            let b = PhaseBasis::new(spin(s));
            let d = b.dim();
            let g = &b.transform * b.transform.adjoint();
            let id = DMatrix::<C64>::identity(d, d);
            assert!((g - &id).iter().all(|v| v.norm() < 1e-12));
            let c = b.transform.adjoint() * &b.transform;
            assert!((c - id).iter().all(|v| v.norm() < 1e-12));
        }
    }

    fn product_rho(a: &[C64], b: &[C64]) -> DMatrix<C64> {
        let v: Vec<C64> = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
        DMatrix::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj())
    }

    #[test]
    fn number_states_have_flat_phase() {
        let b = PhaseBasis::new(spin(6.0));
        let d = b.dim();
        let mut e = vec![ZERO; d];
        e[4] = C64::new(1.0, 0.0);
        let mut f = vec![ZERO; d];
        f[9] = C64::new(1.0, 0.0);
        let dist = phase_distribution(&product_rho(&e, &f), &b).unwrap();
        assert!(dist.p.iter().all(|v| (v - 1.0 / (d * d) as f64).abs() < 1e-14));
        // the grid holds -π but not +π, so the flat mean sits half a step below zero
        let m = phase_moments(&dist);
        assert!((m.phi_plus + PI / d as f64).abs() < 1e-12);
    }

    #[test]
    fn phase_eigenstate_gives_delta() {
        let b = PhaseBasis::new(spin(3.0));
        let (a, c) = (b.state(2), b.state(5));
        let dist = phase_distribution(&product_rho(&a, &c), &b).unwrap();
        assert!((dist.p[(2, 5)] - 1.0).abs() < 1e-12);
        assert!((dist.p.sum() - 1.0).abs() < 1e-12);
        let m = phase_moments(&dist);
        assert!((m.phi_plus - 0.5 * (b.phases[2] + b.phases[5])).abs() < 1e-12);
        assert!(m.var_phi_plus.abs() < 1e-12 && m.var_phi1.abs() < 1e-12);
    }

    #[test]
    fn coherent_state_peaks_at_its_azimuth() {
        let s = spin(6.0);
        let b = PhaseBasis::new(s);
        let target = b.phases[9];
        let psi = crate::states::spin_coherent(PI / 2.0, target, s);
        let probs: Vec<f64> = (0..b.dim()).map(|m| inner(&b.state(m), &psi).norm_sqr()).collect();
        let best = (0..b.dim()).max_by(|x, y| probs[*x].total_cmp(&probs[*y])).unwrap();
        assert_eq!(best, 9);
    }

    #[test]
    fn pure_path_matches_density_path() {
        let dims = HilbertDims::new(spin(2.0), 6).unwrap();
        let q = ClassicalState::from_angles(0.1, 0.05, 1.1, 0.8, 2.0, -2.5);
        let psi = product_state(&q, &dims).unwrap();
        let obs = PhaseObservables::new(dims);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        obs.measure_pure(&psi.amplitudes, &mut a);
        obs.measure_rho(&crate::quantum::pure_density(&psi), &mut b);
        assert_eq!(a.len(), 6);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}
