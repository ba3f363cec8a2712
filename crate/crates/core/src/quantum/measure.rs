use nalgebra::DMatrix;

use crate::operators::{OperatorMatrix, C64};
use crate::states::inner;

/// A family of real-valued readouts that are linear in the state, so the
/// trajectory average of `measure_pure` equals `measure_rho` on the averaged
/// density matrix.
pub trait Measurement: Send + Sync {
    fn labels(&self) -> Vec<String>;
    /// Appends one value per label for a normalized pure state.
    fn measure_pure(&self, psi: &[C64], out: &mut Vec<f64>);
    /// Appends one value per label for a density matrix.
    fn measure_rho(&self, rho: &DMatrix<C64>, out: &mut Vec<f64>);
}

/// `Re ⟨O⟩` of a Hermitian operator.
pub struct Expectation {
    pub label: String,
    pub op: OperatorMatrix,
}

impl Expectation {
    pub fn new(label: impl Into<String>, op: OperatorMatrix) -> Self {
        Self { label: label.into(), op }
    }
}

impl Measurement for Expectation {
    fn labels(&self) -> Vec<String> {
        vec![self.label.clone()]
    }

    fn measure_pure(&self, psi: &[C64], out: &mut Vec<f64>) {
        out.push(self.op.matrix_element(psi, psi).re);
    }

    fn measure_rho(&self, rho: &DMatrix<C64>, out: &mut Vec<f64>) {
        let tr: C64 = self.op.triplets().map(|(r, c, v)| v * rho[(c, r)]).sum();
        out.push(tr.re);
    }
}

/// `|⟨target|ψ⟩|²`, or `⟨target|ρ|target⟩`.
pub struct Overlap {
    pub label: String,
    pub target: Vec<C64>,
}

impl Overlap {
    pub fn new(label: impl Into<String>, target: Vec<C64>) -> Self {
        Self { label: label.into(), target }
    }
}

impl Measurement for Overlap {
    fn labels(&self) -> Vec<String> {
        vec![self.label.clone()]
    }

    fn measure_pure(&self, psi: &[C64], out: &mut Vec<f64>) {
        out.push(inner(&self.target, psi).norm_sqr());
    }

    fn measure_rho(&self, rho: &DMatrix<C64>, out: &mut Vec<f64>) {
        let v = nalgebra::DVector::from_column_slice(&self.target);
        out.push((v.adjoint() * rho * &v)[(0, 0)].re);
    }
}
