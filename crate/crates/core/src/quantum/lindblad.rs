//! Direct integration of the master equation for small Hilbert spaces.

use nalgebra::DMatrix;

use crate::error::{OctdError, Result};
use crate::model::LindbladSpec;
use crate::ode::{Dopri5, Tolerances};
use crate::operators::{OperatorMatrix, C64};
use crate::states::PureState;

/// Density matrices larger than this are refused; the Liouvillian grows as `d⁴`.
pub const DEFAULT_EXACT_DIM_CAP: usize = 100;

#[derive(Clone, Copy, Debug)]
pub struct ExactOptions {
    pub tol: Tolerances,
    pub dim_cap: usize,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self { tol: Tolerances { rtol: 1e-10, atol: 1e-12 }, dim_cap: DEFAULT_EXACT_DIM_CAP }
    }
}

#[derive(Clone, Debug)]
pub struct ExactSeries {
    pub times: Vec<f64>,
    pub rhos: Vec<DMatrix<C64>>,
    pub max_trace_error: f64,
    /// Smallest eigenvalue of the Hermitian part over all samples.
    pub min_eigenvalue: f64,
    pub max_hermiticity_error: f64,
}

pub fn pure_density(psi: &PureState) -> DMatrix<C64> {
    let d = psi.amplitudes.len();
    DMatrix::from_fn(d, d, |r, c| psi.amplitudes[r] * psi.amplitudes[c].conj())
}

fn transpose(m: &OperatorMatrix) -> OperatorMatrix {
    OperatorMatrix::from_triplets(m.dim(), m.triplets().map(|(r, c, v)| (c, r, v)).collect())
}

/// Superoperator acting on column-stacked `vec(ρ)`, using
/// `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.
pub fn liouvillian(spec: &LindbladSpec) -> OperatorMatrix {
    let d = spec.dims.total_dim();
    let id = OperatorMatrix::identity(d);
    let h = &spec.hamiltonian;
    let mut l = (&id.kron(h) - &transpose(h).kron(&id)).scale(C64::new(0.0, -1.0));
    for jump in spec.jumps.iter().filter(|j| j.rate > 0.0) {
        let op = &jump.op;
        let conj = transpose(&op.adjoint());
        let ldl = op.adjoint().matmul(op);
        let term = &(&conj.kron(op) - &(&id.kron(&ldl) * 0.5)) - &(&transpose(&ldl).kron(&id) * 0.5);
        l = &l + &(&term * jump.rate);
    }
    l
}

/// Integrates `ρ̇ = L ρ` from `ρ0` and records `ρ` at each sample time.
pub fn lindblad_exact(
    rho0: &DMatrix<C64>,
    spec: &LindbladSpec,
    sample_times: &[f64],
    opts: &ExactOptions,
) -> Result<ExactSeries> {
    let d = spec.dims.total_dim();
    if d > opts.dim_cap {
        return Err(OctdError::DimensionCap { dim: d, cap: opts.dim_cap });
    }
    if rho0.nrows() != d || rho0.ncols() != d {
        return Err(OctdError::DimensionMismatch { expected: d, found: rho0.nrows() });
    }
    if sample_times.iter().any(|t| *t < 0.0) || sample_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(OctdError::InvalidParams("sample times must be non-negative and non-decreasing".into()));
    }
    let l = liouvillian(spec);
    let f = |_t: f64, y: &[C64], dy: &mut [C64]| l.apply(y, dy);
    let mut ode = Dopri5::<C64>::new(d * d, opts.tol);
    let mut y: Vec<C64> = rho0.as_slice().to_vec();
    let mut t = 0.0;
    let mut series = ExactSeries {
        times: Vec::with_capacity(sample_times.len()),
        rhos: Vec::with_capacity(sample_times.len()),
        max_trace_error: 0.0,
        min_eigenvalue: f64::INFINITY,
        max_hermiticity_error: 0.0,
    };
    for &target in sample_times {
        if target > t {
            ode.advance(&f, t, &mut y, target)?;
            t = target;
        }
        let rho = DMatrix::from_column_slice(d, d, &y);
        let tr = rho.trace();
        series.max_trace_error = series.max_trace_error.max((tr - C64::new(1.0, 0.0)).norm());
        let adj = rho.adjoint();
        let herm = (&rho - &adj).iter().fold(0.0f64, |m, v| m.max(v.norm()));
        series.max_hermiticity_error = series.max_hermiticity_error.max(herm);
        let hpart = (&rho + &adj) * C64::new(0.5, 0.0);
        let min_ev = hpart.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        series.min_eigenvalue = series.min_eigenvalue.min(min_ev);
        series.times.push(target);
        series.rhos.push(rho);
    }
    if series.rhos.is_empty() {
        series.min_eigenvalue = 0.0;
    }
    Ok(series)
}
