use crate::error::{OctdError, Result};
use crate::operators::OperatorMatrix;
use crate::states::PureState;

use super::propagator::TaylorPropagator;

/// `e^{-iHt}ψ0` at each sample time; `H` must be Hermitian.
pub fn unitary_evolve(psi0: &PureState, h: &OperatorMatrix, sample_times: &[f64]) -> Result<Vec<PureState>> {
    if h.dim() != psi0.amplitudes.len() {
        return Err(OctdError::DimensionMismatch { expected: h.dim(), found: psi0.amplitudes.len() });
    }
    let herm = h.hermiticity_error();
    if herm > 1e-12 * h.max_abs().max(1.0) {
        return Err(OctdError::InvalidParams(format!("Hamiltonian is not Hermitian (deviation {herm:e})")));
    }
    if sample_times.iter().any(|t| *t < 0.0) || sample_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(OctdError::InvalidParams("sample times must be non-negative and non-decreasing".into()));
    }
    let mut prop = TaylorPropagator::new(h);
    let mut psi = psi0.amplitudes.clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(sample_times.len());
    for &target in sample_times {
        if target > t {
            prop.advance(&mut psi, target - t)?;
            t = target;
        }
        out.push(PureState { dims: psi0.dims, amplitudes: psi.clone() });
    }
    Ok(out)
}
