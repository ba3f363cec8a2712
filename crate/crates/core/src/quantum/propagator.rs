//! Truncated Taylor-series propagation of `ψ̇ = -iHψ` for sparse, possibly
//! non-Hermitian `H`.
//!
//! One step stores the coefficient vectors `c_k = (-iH)^k ψ / k!`, so the
//! solution `ψ(τ) = Σ c_k τ^k` is available at every `τ` inside the step
//! without further matrix-vector products. Jump times and sample times are
//! read off this polynomial.

use crate::error::{OctdError, Result};
use crate::operators::{OperatorMatrix, C64, ZERO};

/// `‖H‖₁ · h` is kept at or below this.
const STEP_NORM: f64 = 3.0;
const MAX_TERMS: usize = 64;

pub struct TaylorPropagator<'a> {
    h: &'a OperatorMatrix,
    /// Relative truncation tolerance on the last retained term.
    pub tol: f64,
    pub h_max: f64,
    coeffs: Vec<Vec<C64>>,
    terms: usize,
    step: f64,
    scratch: Vec<C64>,
}

impl<'a> TaylorPropagator<'a> {
    pub fn new(h: &'a OperatorMatrix) -> Self {
        let norm = h.one_norm();
        let h_max = if norm > 0.0 { STEP_NORM / norm } else { f64::INFINITY };
        Self {
            h,
            tol: 1e-15,
            h_max,
            coeffs: Vec::new(),
            terms: 0,
            step: 0.0,
            scratch: vec![ZERO; h.dim()],
        }
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// Builds the series at `psi` for a step of length `dt` (clipped to
    /// `h_max`); returns the step actually prepared.
    pub fn prepare(&mut self, psi: &[C64], dt: f64) -> Result<f64> {
        let dt = dt.min(self.h_max);
        if !(dt > 0.0) {
            return Err(OctdError::Numeric(format!("non-positive propagation step {dt}")));
        }
        let d = self.dim();
        let psi_norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if self.coeffs.is_empty() {
            self.coeffs.push(vec![ZERO; d]);
        }
        self.coeffs[0].copy_from_slice(psi);
        let mut k = 0;
        let mut scale = 1.0;
        let mut small = 0;
        loop {
            k += 1;
            if k >= MAX_TERMS {
                return Err(OctdError::Numeric("Taylor series failed to converge".into()));
            }
            if self.coeffs.len() <= k {
                self.coeffs.push(vec![ZERO; d]);
            }
            let (done, rest) = self.coeffs.split_at_mut(k);
            self.h.apply(&done[k - 1], &mut self.scratch);
            let factor = C64::new(0.0, -1.0 / k as f64);
            let mut term_norm = 0.0;
            for (c, s) in rest[0].iter_mut().zip(&self.scratch) {
                *c = factor * s;
                term_norm += c.norm_sqr();
            }
            scale *= dt;
            // two consecutive negligible terms guard against an accidental dip
            if term_norm.sqrt() * scale <= self.tol * psi_norm.max(f64::MIN_POSITIVE) {
                small += 1;
                if small == 2 || term_norm == 0.0 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        self.terms = k + 1;
        self.step = dt;
        Ok(dt)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `ψ(τ)` for `0 ≤ τ ≤ step`, Horner-evaluated.
    pub fn eval(&self, tau: f64, out: &mut [C64]) {
        debug_assert!(tau <= self.step * (1.0 + 1e-12));
        out.copy_from_slice(&self.coeffs[self.terms - 1]);
        for k in (0..self.terms - 1).rev() {
            for (o, c) in out.iter_mut().zip(&self.coeffs[k]) {
                *o = *o * tau + c;
            }
        }
    }

    /// `‖ψ(τ)‖²` without materializing more than one vector.
    pub fn norm_sqr_at(&mut self, tau: f64) -> f64 {
        let mut buf = std::mem::take(&mut self.scratch);
        self.eval(tau, &mut buf);
        let n = buf.iter().map(|a| a.norm_sqr()).sum();
        self.scratch = buf;
        n
    }

    /// Advances `psi` by `dt`, sub-stepping as needed.
    pub fn advance(&mut self, psi: &mut [C64], dt: f64) -> Result<()> {
        let mut left = dt;
        while left > 0.0 {
            let h = self.prepare(psi, left)?;
            self.eval(h, psi);
            left = if h >= left { 0.0 } else { left - h };
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, ModelParams};
    use nalgebra::{DMatrix, DVector};

    fn dense_exp(h: &OperatorMatrix, t: f64) -> DMatrix<C64> {
        let eig = h.to_dense().symmetric_eigen();
        let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t)));
        &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
    }

    #[test]
    fn matches_dense_exponential() {
        let p = ModelParams::new(1.4, 0.7, 0.0).with_spin(1.0, 5);
        let h = build_hamiltonian(&p).unwrap();
        let d = h.dim();
        let psi0: Vec<C64> = (0..d).map(|k| C64::new((k as f64).sin(), (0.3 * k as f64).cos())).collect();
        let nrm = psi0.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let psi0: Vec<C64> = psi0.iter().map(|a| a / nrm).collect();
        let mut psi = psi0.clone();
        let mut prop = TaylorPropagator::new(&h);
        prop.advance(&mut psi, 7.3).unwrap();
        let exact = dense_exp(&h, 7.3) * DVector::from_vec(psi0);
        let err = psi.iter().zip(exact.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn intermediate_evaluation_is_consistent() {
        let p = ModelParams::new(0.5, 0.5, 0.0).with_spin(0.5, 4);
        let h = build_hamiltonian(&p).unwrap();
        let d = h.dim();
        let mut psi0 = vec![ZERO; d];
        psi0[1] = C64::new(1.0, 0.0);
        let mut prop = TaylorPropagator::new(&h);
        let step = prop.prepare(&psi0, 1.0).unwrap();
        let mut mid = vec![ZERO; d];
        prop.eval(0.5 * step, &mut mid);
        let mut direct = psi0.clone();
        TaylorPropagator::new(&h).advance(&mut direct, 0.5 * step).unwrap();
        assert!(mid.iter().zip(&direct).all(|(a, b)| (a - b).norm() < 1e-14));
        assert!((prop.norm_sqr_at(step) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn non_hermitian_decay() {
        // H = -i γ/2 on one level: norm² decays as e^{-γt}
        let h = OperatorMatrix::diagonal(&[C64::new(0.0, -0.25), ZERO]);
        let mut psi = vec![C64::new(1.0, 0.0), ZERO];
        TaylorPropagator::new(&h).advance(&mut psi, 4.0).unwrap();
        assert!((psi[0].norm_sqr() - (-2.0f64).exp()).abs() < 1e-14);
    }
}
