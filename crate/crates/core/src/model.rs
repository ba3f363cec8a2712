//! Model parameters, the coupled-top Dicke Hamiltonian and the photon-loss
//! dissipator.
//!
//! Energies are measured in units of the tunneling `J`, times in `1/J`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{OctdError, Result};
use crate::operators::{
    boson_ladder, embed, spin_matrices, HilbertDims, OperatorMatrix, Slot, Spin, C64, ZERO,
};

/// Largest composite dimension `build_hamiltonian` accepts.
pub const DEFAULT_DIM_CAP: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Cavity frequency.
    #[serde(default = "unit")]
    pub omega_c: f64,
    /// Tunneling; the unit of energy, kept explicit so the convention is visible.
    #[serde(default = "unit")]
    pub j: f64,
    /// Spin-spin coupling.
    pub v: f64,
    /// Spin-cavity coupling.
    pub lambda: f64,
    /// Photon loss rate.
    pub kappa: f64,
    /// Spin magnitude S (half-integer).
    pub spin: f64,
    /// Number of Fock states kept (`|0⟩..|n_max-1⟩`).
    pub n_max: usize,
}

fn unit() -> f64 {
    1.0
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { omega_c: 1.0, j: 1.0, v: 0.0, lambda: 0.0, kappa: 0.0, spin: 1.0, n_max: 2 }
    }
}

impl ModelParams {
    pub fn new(v: f64, lambda: f64, kappa: f64) -> Self {
        Self { v, lambda, kappa, ..Self::default() }
    }

    pub fn with_spin(mut self, spin: f64, n_max: usize) -> Self {
        self.spin = spin;
        self.n_max = n_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega_c, self.j, self.v, self.lambda, self.kappa, self.spin]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(OctdError::InvalidParams("non-finite parameter".into()));
        }
        if self.omega_c <= 0.0 {
            return Err(OctdError::InvalidParams(format!("omega_c = {} must be > 0", self.omega_c)));
        }
        if self.kappa < 0.0 {
            return Err(OctdError::InvalidParams(format!("kappa = {} must be >= 0", self.kappa)));
        }
        if self.j <= 0.0 {
            return Err(OctdError::InvalidParams(format!("J = {} must be > 0", self.j)));
        }
        Spin::new(self.spin)?;
        if self.n_max == 0 {
            return Err(OctdError::InvalidParams("n_max must be >= 1".into()));
        }
        Ok(())
    }

    pub fn dims(&self) -> Result<HilbertDims> {
        self.validate()?;
        HilbertDims::new(Spin::new(self.spin)?, self.n_max)
    }
}

#[derive(Clone, Debug)]
pub struct JumpOperator {
    pub rate: f64,
    pub op: OperatorMatrix,
}

/// Hamiltonian plus jump operators of a Lindblad master equation
/// `ρ̇ = -i[H, ρ] + Σ_k γ_k (L_k ρ L_k† - ½{L_k† L_k, ρ})`.
#[derive(Clone, Debug)]
pub struct LindbladSpec {
    pub dims: HilbertDims,
    pub hamiltonian: OperatorMatrix,
    pub jumps: Vec<JumpOperator>,
}

impl LindbladSpec {
    /// `H - (i/2) Σ γ L†L`
    pub fn effective_hamiltonian(&self) -> OperatorMatrix {
        let mut h = self.hamiltonian.clone();
        for jump in &self.jumps {
            if jump.rate > 0.0 {
                let ldl = jump.op.adjoint().matmul(&jump.op);
                h = &h + &ldl.scale(C64::new(0.0, -0.5 * jump.rate));
            }
        }
        h
    }

    pub fn is_closed(&self) -> bool {
        self.jumps.iter().all(|j| j.rate == 0.0)
    }

    /// Dissipative part `D(ρ)` of the master equation.
    pub fn dissipator(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let d = self.dims.total_dim();
        let mut out = DMatrix::from_element(d, d, ZERO);
        for jump in &self.jumps {
            if jump.rate == 0.0 {
                continue;
            }
            let ldag = jump.op.adjoint();
            let ldl = ldag.matmul(&jump.op);
            let l_rho = jump.op.mul_dense(rho);
            let l_rho_ldag = ldag.left_mul_dense(&l_rho);
            let anti = ldl.mul_dense(rho) + ldl.left_mul_dense(rho);
            out += (l_rho_ldag - anti * C64::new(0.5, 0.0)) * C64::new(jump.rate, 0.0);
        }
        out
    }

    /// Full right-hand side `-i[H, ρ] + D(ρ)`.
    pub fn rhs(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let h_rho = self.hamiltonian.mul_dense(rho);
        let rho_h = self.hamiltonian.left_mul_dense(rho);
        (h_rho - rho_h) * C64::new(0.0, -1.0) + self.dissipator(rho)
    }
}

/// The coupled-top Dicke Hamiltonian
/// `ω_c a†a - J(S1x + S2x) + (V/S) S1z S2z + λ/√(2S) (S1z + S2z)(a + a†)`.
pub fn build_hamiltonian(p: &ModelParams) -> Result<OperatorMatrix> {
    build_hamiltonian_capped(p, DEFAULT_DIM_CAP)
}

pub fn build_hamiltonian_capped(p: &ModelParams, cap: usize) -> Result<OperatorMatrix> {
    let dims = p.dims()?;
    if dims.total_dim() > cap {
        return Err(OctdError::DimensionCap { dim: dims.total_dim(), cap });
    }
    let s = dims.spin.value();
    let sm = spin_matrices(dims.spin);
    let lad = boson_ladder(dims.fock_cutoff)?;

    let n = embed(&lad.n, Slot::Photon, &dims)?;
    let quad = embed(&(&lad.a + &lad.a_dag), Slot::Photon, &dims)?;
    let s1x = embed(&sm.x, Slot::Spin1, &dims)?;
    let s2x = embed(&sm.x, Slot::Spin2, &dims)?;
    let s1z = embed(&sm.z, Slot::Spin1, &dims)?;
    let s2z = embed(&sm.z, Slot::Spin2, &dims)?;
    let sz_sum = &s1z + &s2z;

    let mut h = &n * p.omega_c;
    h = &h - &(&(&s1x + &s2x) * p.j);
    h = &h + &(&s1z.matmul(&s2z) * (p.v / s));
    h = &h + &(&sz_sum.matmul(&quad) * (p.lambda / (2.0 * s).sqrt()));
    Ok(h)
}

pub fn build_lindblad(p: &ModelParams) -> Result<LindbladSpec> {
    let dims = p.dims()?;
    let hamiltonian = build_hamiltonian(p)?;
    let lad = boson_ladder(dims.fock_cutoff)?;
    let a = embed(&lad.a, Slot::Photon, &dims)?;
    Ok(LindbladSpec { dims, hamiltonian, jumps: vec![JumpOperator { rate: p.kappa, op: a }] })
}

/// Outcome of rebuilding spin-S operators from two bosonic modes.
#[derive(Clone, Debug)]
pub struct BjjReport {
    pub spin: Spin,
    pub bosons: usize,
    /// `max |[Sx, Sy] - i Sz|` on the fixed-N sector.
    pub commutator_error: f64,
    /// Spectrum of the reconstructed `Sz`, ascending.
    pub sz_spectrum: Vec<f64>,
    /// `max |S_boson - S_spin|` over x, y, z after identifying `|n_L, n_R⟩`
    /// with `|S, m = (n_L - n_R)/2⟩`.
    pub max_deviation_from_spin: f64,
}

/// Rebuilds the spin algebra from two-mode bosons via
/// `S- = a_R† a_L`, `Sz = (n_L - n_R)/2` on the `N = 2S` sector.
pub fn bjj_mapping_check(spin: Spin) -> Result<BjjReport> {
    let n_bosons = spin.twice() as usize;
    let cut = n_bosons + 1;
    let lad = boson_ladder(cut)?;
    let id = OperatorMatrix::identity(cut);
    // two-mode space |n_L⟩ ⊗ |n_R⟩
    let a_l = lad.a.kron(&id);
    let a_r = id.kron(&lad.a);
    let n_l = lad.n.kron(&id);
    let n_r = id.kron(&lad.n);
    let s_minus = a_r.adjoint().matmul(&a_l);
    let s_plus = s_minus.adjoint();
    let s_z = (&n_l - &n_r).scale(C64::new(0.5, 0.0));
    let s_x = (&s_plus + &s_minus).scale(C64::new(0.5, 0.0));
    let s_y = (&s_plus - &s_minus).scale(C64::new(0.0, -0.5));

    // sector states ordered by m ascending: n_L = S + m = k, n_R = N - k
    let sector: Vec<usize> = (0..=n_bosons).map(|k| k * cut + (n_bosons - k)).collect();
    let restrict = |op: &OperatorMatrix| -> DMatrix<C64> {
        DMatrix::from_fn(sector.len(), sector.len(), |r, c| op.get(sector[r], sector[c]))
    };
    let (x, y, z) = (restrict(&s_x), restrict(&s_y), restrict(&s_z));
    let comm = &x * &y - &y * &x - &z * C64::new(0.0, 1.0);
    let commutator_error = comm.iter().map(|v| v.norm()).fold(0.0, f64::max);

    let mut sz_spectrum: Vec<f64> = z.symmetric_eigenvalues().iter().copied().collect();
    sz_spectrum.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let sm = spin_matrices(spin);
    let dev = |a: &DMatrix<C64>, b: &OperatorMatrix| (a - b.to_dense()).iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let max_deviation_from_spin = dev(&x, &sm.x).max(dev(&y, &sm.y)).max(dev(&z, &sm.z));

    Ok(BjjReport { spin, bosons: n_bosons, commutator_error, sz_spectrum, max_deviation_from_spin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::spin_swap;

    fn params(v: f64, lambda: f64, kappa: f64, s: f64, n_max: usize) -> ModelParams {
        ModelParams::new(v, lambda, kappa).with_spin(s, n_max)
    }

    #[test]
    fn decoupled_ground_energy() {
        let h = build_hamiltonian(&params(0.0, 0.0, 0.0, 1.0, 2)).unwrap();
        let eig = h.to_dense().symmetric_eigenvalues();
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((min + 2.0).abs() < 1e-12);
    }

    #[test]
    fn photon_number_conserved_without_coupling() {
        let p = params(1.3, 0.0, 0.0, 1.5, 4);
        let dims = p.dims().unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let n = embed(&boson_ladder(4).unwrap().n, Slot::Photon, &dims).unwrap();
        assert!(h.commutator(&n).max_abs() < 1e-12);
    }

    #[test]
    fn hermitian_and_swap_symmetric() {
        for &(v, l, s, n) in &[(0.5, 0.5, 1.0, 4), (1.4, 0.2, 2.5, 5), (2.0, 1.3, 3.0, 3)] {
            let p = params(v, l, 0.1, s, n);
            let h = build_hamiltonian(&p).unwrap();
            assert!(h.hermiticity_error() < 1e-10);
            let sw = spin_swap(&p.dims().unwrap());
            let conj = sw.matmul(&h).matmul(&sw);
            assert!(conj.max_abs_diff(&h) < 1e-10);
        }
    }

    #[test]
    fn block_diagonal_in_photon_number_at_zero_coupling() {
        let p = params(0.8, 0.0, 0.0, 1.0, 5);
        let dims = p.dims().unwrap();
        let h = build_hamiltonian(&p).unwrap();
        for (r, c, _) in h.triplets() {
            assert_eq!(dims.split(r).2, dims.split(c).2);
        }
    }

    #[test]
    fn figure_three_configuration_builds() {
        let p = params(1.4, 0.2, 0.1, 5.0, 8);
        let h = build_hamiltonian(&p).unwrap();
        assert_eq!(h.dim(), 11 * 11 * 8);
        assert!(h.hermiticity_error() < 1e-10);
    }

    #[test]
    fn dimension_cap_enforced() {
        let p = params(1.0, 0.1, 0.1, 8.0, 40);
        assert!(matches!(
            build_hamiltonian_capped(&p, 1000),
            Err(OctdError::DimensionCap { .. })
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(params(1.0, 0.1, -0.1, 1.0, 2).validate().is_err());
        assert!(params(1.0, 0.1, 0.1, 0.7, 2).validate().is_err());
        assert!(params(1.0, 0.1, 0.1, 1.0, 0).validate().is_err());
        let mut p = params(1.0, 0.1, 0.1, 1.0, 2);
        p.omega_c = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn lindblad_jump_list() {
        let closed = build_lindblad(&params(1.0, 0.2, 0.0, 1.0, 3)).unwrap();
        assert_eq!(closed.jumps.len(), 1);
        assert_eq!(closed.jumps[0].rate, 0.0);
        assert!(closed.is_closed());
        let open = build_lindblad(&params(1.0, 0.2, 0.3, 6.0, 3)).unwrap();
        assert_eq!(open.jumps.len(), 1);
        assert_eq!(open.jumps[0].rate, 0.3);
        assert!(!open.is_closed());
    }

    #[test]
    fn dissipator_annihilates_photon_vacuum() {
        let p = params(1.0, 0.2, 0.3, 1.0, 3);
        let spec = build_lindblad(&p).unwrap();
        let dims = spec.dims;
        // |ψ_spin⟩ ⊗ |0⟩ with an arbitrary spin part
        let mut psi = vec![ZERO; dims.total_dim()];
        for i1 in 0..3 {
            for i2 in 0..3 {
                psi[dims.index(i1, i2, 0)] = C64::new(1.0 + i1 as f64, i2 as f64 - 0.5);
            }
        }
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|c| *c /= norm);
        let v = nalgebra::DVector::from_vec(psi);
        let rho = &v * v.adjoint();
        assert!(spec.dissipator(&rho).iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn schwinger_map_reproduces_spin_algebra() {
        let half = bjj_mapping_check(Spin::new(0.5).unwrap()).unwrap();
        assert_eq!(half.bosons, 1);
        assert!(half.commutator_error < 1e-12);
        assert!(half.max_deviation_from_spin < 1e-12);

        let one = bjj_mapping_check(Spin::new(1.0).unwrap()).unwrap();
        for (e, m) in one.sz_spectrum.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((e - m).abs() < 1e-12);
        }

        let two = bjj_mapping_check(Spin::new(2.0).unwrap()).unwrap();
        assert_eq!(two.bosons, 4);
        assert!(two.commutator_error < 1e-12);
        assert!(two.max_deviation_from_spin < 1e-12);
    }

    #[test]
    fn params_toml_roundtrip_and_strictness() {
        let p = params(1.4, 0.2, 0.1, 5.0, 8);
        let s = toml::to_string(&p).unwrap();
        let back: ModelParams = toml::from_str(&s).unwrap();
        assert_eq!(p, back);
        assert!(toml::from_str::<ModelParams>("v=1\nlambda=0.1\nkappa=0\nspin=1\nn_max=2\nlamda=3").is_err());
        let defaulted: ModelParams = toml::from_str("v=1\nlambda=0.1\nkappa=0\nspin=1\nn_max=2").unwrap();
        assert_eq!(defaulted.omega_c, 1.0);
        assert_eq!(defaulted.j, 1.0);
    }
}
