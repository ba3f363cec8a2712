//! Measured quantities: expectations, reduced states, overlaps, phase
//! distributions, Husimi densities and spectra.

mod husimi;
mod phase;
mod spectrum;

use nalgebra::DMatrix;

use crate::classical::{catalog_entry, fixed_point_catalog, FixedPointLabel};
use crate::error::{OctdError, Result};
use crate::model::ModelParams;
use crate::operators::{boson_ladder, embed, spin_matrices, HilbertDims, OperatorMatrix, Slot, C64, ZERO};
use crate::quantum::{Expectation, Measurement, Overlap};
use crate::states::{inner, product_state, PureState};

pub use husimi::{husimi, HusimiGrid, DEFAULT_HUSIMI_RES};
pub use phase::{phase_distribution, phase_moments, PhaseBasis, PhaseDistribution, PhaseMoments, PhaseObservables};
pub use spectrum::{fourier_spectrum, Spectrum};

/// A pure state or a density matrix.
#[derive(Clone, Copy, Debug)]
pub enum StateRef<'a> {
    Pure(&'a [C64]),
    Mixed(&'a DMatrix<C64>),
}

impl StateRef<'_> {
    fn dim(&self) -> usize {
        match self {
            StateRef::Pure(v) => v.len(),
            StateRef::Mixed(m) => m.nrows(),
        }
    }
}

/// `⟨ψ|O|ψ⟩` or `Tr(ρO)`.
pub fn expectation(state: StateRef<'_>, op: &OperatorMatrix) -> Result<C64> {
    if state.dim() != op.dim() {
        return Err(OctdError::DimensionMismatch { expected: op.dim(), found: state.dim() });
    }
    Ok(match state {
        StateRef::Pure(psi) => op.matrix_element(psi, psi),
        StateRef::Mixed(rho) => {
            if rho.ncols() != rho.nrows() {
                return Err(OctdError::DimensionMismatch { expected: rho.nrows(), found: rho.ncols() });
            }
            op.triplets().map(|(r, c, v)| v * rho[(c, r)]).sum()
        }
    })
}

/// Expectation of a Hermitian operator; a residual imaginary part above
/// `1e-10` is reported as an error.
pub fn expectation_real(state: StateRef<'_>, op: &OperatorMatrix) -> Result<f64> {
    let v = expectation(state, op)?;
    if v.im.abs() > 1e-10 * v.re.abs().max(1.0) {
        return Err(OctdError::Numeric(format!("expectation has imaginary part {:e}", v.im)));
    }
    Ok(v.re)
}

fn slot_digits(dims: &HilbertDims) -> [usize; 3] {
    [dims.spin_dim(), dims.spin_dim(), dims.fock_cutoff]
}

fn slot_pos(slot: Slot) -> usize {
    match slot {
        Slot::Spin1 => 0,
        Slot::Spin2 => 1,
        Slot::Photon => 2,
    }
}

/// Splits every full index into (kept, traced) indices.
fn index_split(dims: &HilbertDims, keep: &[Slot]) -> Result<(usize, usize, Vec<(usize, usize)>)> {
    let mut mask = [false; 3];
    for s in keep {
        let p = slot_pos(*s);
        if mask[p] {
            return Err(OctdError::InvalidParams("slot listed twice in partial trace".into()));
        }
        mask[p] = true;
    }
    let sizes = slot_digits(dims);
    let kept_dim: usize = (0..3).filter(|p| mask[*p]).map(|p| sizes[p]).product();
    let traced_dim: usize = (0..3).filter(|p| !mask[*p]).map(|p| sizes[p]).product();
    let map = (0..dims.total_dim())
        .map(|idx| {
            let (i1, i2, n) = dims.split(idx);
            let digits = [i1, i2, n];
            let (mut k, mut t) = (0, 0);
            for p in 0..3 {
                if mask[p] {
                    k = k * sizes[p] + digits[p];
                } else {
                    t = t * sizes[p] + digits[p];
                }
            }
            (k, t)
        })
        .collect();
    Ok((kept_dim, traced_dim, map))
}

/// Partial trace keeping `keep`; kept slots are ordered spin 1, spin 2, photon.
pub fn reduce(state: StateRef<'_>, dims: &HilbertDims, keep: &[Slot]) -> Result<DMatrix<C64>> {
    if state.dim() != dims.total_dim() {
        return Err(OctdError::DimensionMismatch { expected: dims.total_dim(), found: state.dim() });
    }
    let (kd, td, map) = index_split(dims, keep)?;
    match state {
        StateRef::Pure(psi) => {
            // ψ as a kd × td matrix, then M M†
            let mut m = DMatrix::from_element(kd, td, ZERO);
            for (idx, (k, t)) in map.iter().enumerate() {
                m[(*k, *t)] = psi[idx];
            }
            Ok(&m * m.adjoint())
        }
        StateRef::Mixed(rho) => {
            let mut by_traced: Vec<Vec<(usize, usize)>> = vec![Vec::new(); td];
            for (idx, (k, t)) in map.iter().enumerate() {
                by_traced[*t].push((*k, idx));
            }
            let mut out = DMatrix::from_element(kd, kd, ZERO);
            for group in &by_traced {
                for &(a, ia) in group {
                    for &(b, ib) in group {
                        out[(a, b)] += rho[(ia, ib)];
                    }
                }
            }
            Ok(out)
        }
    }
}

pub fn purity(rho: &DMatrix<C64>) -> f64 {
    rho.iter().map(|v| v.norm_sqr()).sum()
}

/// `⟨ψ0|ρ(t)|ψ0⟩`, which equals `Tr(ρ(t)ρ(0))` for pure `ρ(0)`.
pub fn survival_probability(rho_t: &DMatrix<C64>, psi0: &[C64]) -> Result<f64> {
    if rho_t.nrows() != psi0.len() {
        return Err(OctdError::DimensionMismatch { expected: psi0.len(), found: rho_t.nrows() });
    }
    let v = nalgebra::DVector::from_column_slice(psi0);
    let f = (v.adjoint() * rho_t * &v)[(0, 0)].re;
    Ok(f.clamp(0.0, 1.0))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OverlapSeries {
    pub times: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
}

/// `F_j(t) = ⟨ψ_cj|ρ(t)|ψ_cj⟩` for an assembled `ρ(t)` series.
pub fn branch_overlaps(
    times: &[f64],
    rhos: &[DMatrix<C64>],
    psi_c1: &[C64],
    psi_c2: &[C64],
) -> Result<OverlapSeries> {
    if times.len() != rhos.len() {
        return Err(OctdError::InvalidParams("times and states differ in length".into()));
    }
    let mut out = OverlapSeries { times: times.to_vec(), ..Default::default() };
    for rho in rhos {
        out.f1.push(survival_probability(rho, psi_c1)?);
        out.f2.push(survival_probability(rho, psi_c2)?);
    }
    Ok(out)
}

/// Same overlaps from a pure-state series.
pub fn branch_overlaps_pure(times: &[f64], states: &[PureState], psi_c1: &[C64], psi_c2: &[C64]) -> OverlapSeries {
    OverlapSeries {
        times: times.to_vec(),
        f1: states.iter().map(|s| inner(psi_c1, &s.amplitudes).norm_sqr()).collect(),
        f2: states.iter().map(|s| inner(psi_c2, &s.amplitudes).norm_sqr()).collect(),
    }
}

/// Product coherent states on the two FSR2 branches (`+` first) of the
/// isolated system with the given couplings.
pub fn fsr2_branch_states(params: &ModelParams) -> Result<(PureState, PureState)> {
    let closed = ModelParams { kappa: 0.0, ..*params };
    let dims = params.dims()?;
    let cat = fixed_point_catalog(&closed);
    let mut out = Vec::with_capacity(2);
    for label in [FixedPointLabel::Fsr2Plus, FixedPointLabel::Fsr2Minus] {
        let fp = catalog_entry(&cat, label);
        if !fp.exists {
            return Err(OctdError::MissingFixedPoint(label.to_string()));
        }
        out.push(product_state(&fp.state, &dims)?);
    }
    let b = out.pop().unwrap();
    Ok((out.pop().unwrap(), b))
}

/// Photon number, symmetric and antisymmetric imbalances and their squares.
///
/// Labels: `n` (raw `a†a`), `n_scaled` (`a†a/S`, the mean-field photon
/// number), `z_plus_sq`, `z_plus`, `z_minus_sq`, `z_minus`.
pub fn collective_measurements(dims: &HilbertDims) -> Result<Vec<Expectation>> {
    let s = dims.spin.value();
    let sm = spin_matrices(dims.spin);
    let lad = boson_ladder(dims.fock_cutoff)?;
    let z1 = embed(&sm.z, Slot::Spin1, dims)?;
    let z2 = embed(&sm.z, Slot::Spin2, dims)?;
    let zp = &(&z1 + &z2) * (0.5 / s);
    let zm = &(&z1 - &z2) * (0.5 / s);
    let n = embed(&lad.n, Slot::Photon, dims)?;
    Ok(vec![
        Expectation::new("n_scaled", &n * (1.0 / s)),
        Expectation::new("n", n),
        Expectation::new("z_plus_sq", zp.matmul(&zp)),
        Expectation::new("z_plus", zp),
        Expectation::new("z_minus_sq", zm.matmul(&zm)),
        Expectation::new("z_minus", zm),
    ])
}

/// Survival probability and the second-branch overlap as trajectory
/// measurements labelled `f1` and `f2`.
pub fn overlap_measurements(psi_c1: &PureState, psi_c2: &PureState) -> [Overlap; 2] {
    [Overlap::new("f1", psi_c1.amplitudes.clone()), Overlap::new("f2", psi_c2.amplitudes.clone())]
}

/// Convenience view for heterogeneous measurement lists.
pub fn as_dyn<M: Measurement>(ms: &[M]) -> Vec<&dyn Measurement> {
    ms.iter().map(|m| m as &dyn Measurement).collect()
}
