use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{OctdError, Result};
use crate::operators::{Spin, C64, ZERO};

pub const DEFAULT_HUSIMI_RES: usize = 201;

/// `⟨z,φ|ρ|z,φ⟩` on a `(z, φ)` grid, `z ∈ [-1, 1]`, `φ ∈ (-π, π]`.
#[derive(Clone, Debug)]
pub struct HusimiGrid {
    pub z: Vec<f64>,
    pub phi: Vec<f64>,
    /// Coherent-state expectation values, indexed `[(iz, iphi)]`.
    pub raw: DMatrix<f64>,
    /// Divides `raw` so that the discrete sphere integral of `q` is 1.
    pub normalization: f64,
    pub q: DMatrix<f64>,
}

impl HusimiGrid {
    /// Trapezoid weights in `z`, uniform periodic weights in `φ`.
    fn weights(&self) -> (Vec<f64>, f64) {
        let nz = self.z.len();
        let dz = if nz > 1 { 2.0 / (nz - 1) as f64 } else { 2.0 };
        let wz = (0..nz).map(|i| if i == 0 || i + 1 == nz { 0.5 * dz } else { dz }).collect();
        (wz, 2.0 * PI / self.phi.len() as f64)
    }

    pub fn integral(&self) -> f64 {
        let (wz, dphi) = self.weights();
        (0..self.z.len()).map(|i| wz[i] * dphi * self.q.row(i).sum()).sum()
    }

    /// `(z, φ)` of the largest value.
    pub fn argmax(&self) -> (f64, f64) {
        let (mut best, mut at) = (f64::NEG_INFINITY, (0, 0));
        for i in 0..self.z.len() {
            for j in 0..self.phi.len() {
                if self.raw[(i, j)] > best {
                    best = self.raw[(i, j)];
                    at = (i, j);
                }
            }
        }
        (self.z[at.0], self.phi[at.1])
    }
}

/// Husimi density of a single-spin state on an `nz × nphi` grid.
pub fn husimi(rho: &DMatrix<C64>, spin: Spin, nz: usize, nphi: usize) -> Result<HusimiGrid> {
    let d = spin.dim();
    if rho.nrows() != d || rho.ncols() != d {
        return Err(OctdError::DimensionMismatch { expected: d, found: rho.nrows() });
    }
    if nz < 2 || nphi < 1 {
        return Err(OctdError::InvalidParams("Husimi grid needs at least 2 z points and 1 phi point".into()));
    }
    let two_s = spin.twice() as usize;
    let z: Vec<f64> = (0..nz).map(|i| -1.0 + 2.0 * i as f64 / (nz - 1) as f64).collect();
    let phi: Vec<f64> = (0..nphi).map(|j| -PI + 2.0 * PI * (j + 1) as f64 / nphi as f64).collect();
    let ln_binom: Vec<f64> = (0..=two_s).map(|k| 0.5 * (ln_fact(two_s) - ln_fact(k) - ln_fact(two_s - k))).collect();
    let rows: Vec<Vec<f64>> = z
        .par_iter()
        .map(|&zv| {
            let c = (0.5 * (1.0 + zv)).max(0.0).sqrt();
            let s = (0.5 * (1.0 - zv)).max(0.0).sqrt();
            let mag: Vec<f64> = (0..=two_s)
                .map(|k| ln_binom[k].exp() * c.powi(k as i32) * s.powi((two_s - k) as i32))
                .collect();
            // diagonal sums a[Δ] = Σ_{k-l=Δ} mag_k mag_l ρ_kl, Δ = 0..2S
            let mut a = vec![ZERO; d];
            for k in 0..d {
                for l in 0..=k {
                    a[k - l] += rho[(k, l)] * (mag[k] * mag[l]);
                }
            }
            phi.iter()
                .map(|&p| {
                    let mut v = a[0].re;
                    for (delta, ad) in a.iter().enumerate().skip(1) {
                        // ρ Hermitian: the Δ and -Δ terms are conjugate
                        v += 2.0 * (ad * C64::from_polar(1.0, delta as f64 * p)).re;
                    }
                    v.max(0.0)
                })
                .collect()
        })
        .collect();
    let raw = DMatrix::from_fn(nz, nphi, |i, j| rows[i][j]);
    let mut grid = HusimiGrid { z, phi, q: raw.clone(), raw, normalization: 1.0 };
    let total = grid.integral();
    if !(total > 0.0) {
        return Err(OctdError::Numeric("Husimi density integrates to zero".into()));
    }
    grid.normalization = total;
    grid.q = &grid.raw / total;
    Ok(grid)
}

fn ln_fact(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::spin_coherent;

    fn pure(v: &[C64]) -> DMatrix<C64> {
        DMatrix::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj())
    }

    #[test]
    fn coherent_state_peak_location() {
        let s = Spin::new(5.0).unwrap();
        let (theta, phi) = (1.1f64, -2.2f64);
        let g = husimi(&pure(&spin_coherent(theta, phi, s)), s, 201, 201).unwrap();
        let (zp, pp) = g.argmax();
        assert!((zp - theta.cos()).abs() <= 0.01 + 1e-12);
        assert!((pp - phi).abs() <= 2.0 * PI / 201.0 + 1e-12);
        assert!((g.integral() - 1.0).abs() < 1e-12);
        // raw values integrate to 4π/(2S+1) up to grid error
        assert!((g.normalization - 4.0 * PI / 11.0).abs() < 1e-3);
    }

    #[test]
    fn mixed_state_is_flat() {
        let s = Spin::new(3.0).unwrap();
        let rho = DMatrix::from_diagonal_element(7, 7, C64::new(1.0 / 7.0, 0.0));
        let g = husimi(&rho, s, 41, 37).unwrap();
        let first = g.raw[(0, 0)];
        assert!(g.raw.iter().all(|v| (v - first).abs() < 1e-10));
        assert!((first - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn phi_marginal_matches_kernel_convolution() {
        let s = Spin::new(2.0).unwrap();
        let v: Vec<C64> = (0..5).map(|k| C64::new(1.0 + k as f64, 0.5 * k as f64 - 1.0)).collect();
        let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let rho = pure(&v.iter().map(|a| a / n).collect::<Vec<_>>());
        let g = husimi(&rho, s, 21, 64).unwrap();
        for (i, &z) in g.z.iter().enumerate() {
            let marginal: f64 = g.raw.row(i).sum() * 2.0 * PI / 64.0;
            let (c2, s2) = (0.5 * (1.0 + z), 0.5 * (1.0 - z));
            let kernel: f64 = (0..5)
                .map(|k| {
                    let binom = [1.0, 4.0, 6.0, 4.0, 1.0][k];
                    rho[(k, k)].re * binom * c2.powi(k as i32) * s2.powi(4 - k as i32)
                })
                .sum::<f64>()
                * 2.0
                * PI;
            assert!((marginal - kernel).abs() < 1e-6, "{z}: {marginal} vs {kernel}");
        }
    }
}
