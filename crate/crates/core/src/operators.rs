//! Hilbert-space bookkeeping and elementary operators.
//!
//! The composite space is `spin1 ⊗ spin2 ⊗ photon`. Spin bases are ordered by
//! ascending magnetic quantum number `m = -S..S`, photon bases by ascending
//! Fock number `0..n_max-1`. A composite index is
//! `(i1 * (2S+1) + i2) * n_max + n`. Every serialized state depends on this
//! ordering.
//!
//! Operators are stored in compressed sparse row form. Production-size spaces
//! (S = 8, a few dozen Fock states) have tens of thousands of basis states,
//! where dense storage would not fit in memory, while every operator in the
//! model has only a handful of nonzeros per row. `to_dense` is available for
//! small-dimension work (spectra, oracles, tests).

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{OctdError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// A positive half-integer spin magnitude, stored as `2S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub fn new(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if !(s > 0.0) || !twice.is_finite() || (twice - twice.round()).abs() > 1e-9 {
            return Err(OctdError::InvalidSpin(s));
        }
        Ok(Self { twice: twice.round() as u32 })
    }

    pub fn from_twice(twice: u32) -> Result<Self> {
        if twice == 0 {
            return Err(OctdError::InvalidSpin(0.0));
        }
        Ok(Self { twice })
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    /// Magnetic quantum numbers in basis order.
    pub fn m_values(self) -> impl Iterator<Item = f64> {
        let s = self.value();
        (0..self.dim()).map(move |k| k as f64 - s)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Spin1,
    Spin2,
    Photon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HilbertDims {
    pub spin: Spin,
    pub fock_cutoff: usize,
}

impl HilbertDims {
    pub fn new(spin: Spin, fock_cutoff: usize) -> Result<Self> {
        if fock_cutoff == 0 {
            return Err(OctdError::InvalidParams("Fock cutoff must be at least 1".into()));
        }
        Ok(Self { spin, fock_cutoff })
    }

    pub fn spin_dim(&self) -> usize {
        self.spin.dim()
    }

    pub fn total_dim(&self) -> usize {
        self.spin_dim() * self.spin_dim() * self.fock_cutoff
    }

    pub fn slot_dim(&self, slot: Slot) -> usize {
        match slot {
            Slot::Spin1 | Slot::Spin2 => self.spin_dim(),
            Slot::Photon => self.fock_cutoff,
        }
    }

    pub fn index(&self, i1: usize, i2: usize, n: usize) -> usize {
        (i1 * self.spin_dim() + i2) * self.fock_cutoff + n
    }

    /// Inverse of [`HilbertDims::index`].
    pub fn split(&self, idx: usize) -> (usize, usize, usize) {
        let n = idx % self.fock_cutoff;
        let rest = idx / self.fock_cutoff;
        (rest / self.spin_dim(), rest % self.spin_dim(), n)
    }
}

/// Square complex matrix in compressed sparse row form.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl OperatorMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside {dim}x{dim}");
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != ZERO {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { dim, row_ptr, cols: keep_cols, vals: keep_vals }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![ONE; dim])
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let trip = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), trip)
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operator must be square");
        let mut trip = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != ZERO {
                    trip.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), trip)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, ZERO);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// `out = self · v`
    pub fn apply(&self, v: &[C64], out: &mut [C64]) {
        debug_assert_eq!(v.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * v[self.cols[k]];
            }
            *o = acc;
        }
    }

    pub fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        self.apply(v, &mut out);
        out
    }

    /// `self · m` for a dense right factor.
    pub fn mul_dense(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(m.nrows(), self.dim);
        let mut out = DMatrix::from_element(self.dim, m.ncols(), ZERO);
        for (r, c, v) in self.triplets() {
            for j in 0..m.ncols() {
                out[(r, j)] += v * m[(c, j)];
            }
        }
        out
    }

    /// `m · self` for a dense left factor.
    pub fn left_mul_dense(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(m.ncols(), self.dim);
        let mut out = DMatrix::from_element(m.nrows(), self.dim, ZERO);
        for (r, c, v) in self.triplets() {
            for i in 0..m.nrows() {
                out[(i, c)] += m[(i, r)] * v;
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let trip = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.dim, trip)
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn kron(&self, other: &Self) -> Self {
        let d = self.dim * other.dim;
        let mut trip = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.triplets() {
            for (r2, c2, v2) in other.triplets() {
                trip.push((r1 * other.dim + r2, c1 * other.dim + c2, v1 * v2));
            }
        }
        Self::from_triplets(d, trip)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let mut trip = Vec::new();
        let mut acc = vec![ZERO; self.dim];
        let mut touched = Vec::new();
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let mid = self.cols[k];
                for k2 in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    let c = other.cols[k2];
                    if acc[c] == ZERO {
                        touched.push(c);
                    }
                    acc[c] += self.vals[k] * other.vals[k2];
                }
            }
            for &c in &touched {
                trip.push((r, c, acc[c]));
                acc[c] = ZERO;
            }
            touched.clear();
        }
        Self::from_triplets(self.dim, trip)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Maximum absolute column sum; bounds the spectral norm of a Hermitian
    /// operator.
    pub fn one_norm(&self) -> f64 {
        let mut col = vec![0.0; self.dim];
        for (_, c, v) in self.triplets() {
            col[c] += v.norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    /// `⟨u|self|v⟩`
    pub fn matrix_element(&self, u: &[C64], v: &[C64]) -> C64 {
        let mut acc = ZERO;
        for r in 0..self.dim {
            let mut row = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.vals[k] * v[self.cols[k]];
            }
            acc += u[r].conj() * row;
        }
        acc
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        let trip = self.triplets().chain(rhs.triplets()).collect();
        OperatorMatrix::from_triplets(self.dim, trip)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self + &rhs.scale(-ONE)
    }
}

impl Mul<f64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: f64) -> OperatorMatrix {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.matmul(rhs)
    }
}

#[derive(Clone, Debug)]
pub struct SpinMatrices {
    pub x: OperatorMatrix,
    pub y: OperatorMatrix,
    pub z: OperatorMatrix,
    pub plus: OperatorMatrix,
    pub minus: OperatorMatrix,
}

pub fn spin_matrices(spin: Spin) -> SpinMatrices {
    let s = spin.value();
    let d = spin.dim();
    let ms: Vec<f64> = spin.m_values().collect();
    let z = OperatorMatrix::diagonal(&ms.iter().map(|&m| C64::new(m, 0.0)).collect::<Vec<_>>());
    // S+ |m⟩ = sqrt(S(S+1) - m(m+1)) |m+1⟩
    let plus_trip = (0..d - 1)
        .map(|k| {
            let m = ms[k];
            (k + 1, k, C64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0))
        })
        .collect();
    let plus = OperatorMatrix::from_triplets(d, plus_trip);
    let minus = plus.adjoint();
    let x = (&plus + &minus).scale(C64::new(0.5, 0.0));
    let y = (&plus - &minus).scale(C64::new(0.0, -0.5));
    SpinMatrices { x, y, z, plus, minus }
}

#[derive(Clone, Debug)]
pub struct LadderOps {
    pub a: OperatorMatrix,
    pub a_dag: OperatorMatrix,
    pub n: OperatorMatrix,
}

/// Truncated bosonic ladder operators on `|0⟩..|n_max-1⟩`.
///
/// `[a, a†]` equals the identity except at `(n_max-1, n_max-1)`, where it is
/// `-(n_max-1)`; the truncation artifact is harmless while the top Fock levels
/// stay empty.
pub fn boson_ladder(n_max: usize) -> Result<LadderOps> {
    if n_max == 0 {
        return Err(OctdError::InvalidParams("Fock cutoff must be at least 1".into()));
    }
    let trip = (1..n_max).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0))).collect();
    let a = OperatorMatrix::from_triplets(n_max, trip);
    let a_dag = a.adjoint();
    let n = OperatorMatrix::diagonal(
        &(0..n_max).map(|k| C64::new(k as f64, 0.0)).collect::<Vec<_>>(),
    );
    Ok(LadderOps { a, a_dag, n })
}

/// Lifts a single-slot operator to the composite space.
pub fn embed(op: &OperatorMatrix, slot: Slot, dims: &HilbertDims) -> Result<OperatorMatrix> {
    let expected = dims.slot_dim(slot);
    if op.dim() != expected {
        return Err(OctdError::DimensionMismatch { expected, found: op.dim() });
    }
    let id_s = OperatorMatrix::identity(dims.spin_dim());
    let id_p = OperatorMatrix::identity(dims.fock_cutoff);
    Ok(match slot {
        Slot::Spin1 => op.kron(&id_s).kron(&id_p),
        Slot::Spin2 => id_s.kron(op).kron(&id_p),
        Slot::Photon => id_s.kron(&id_s).kron(op),
    })
}

/// Permutation exchanging the two spin slots.
pub fn spin_swap(dims: &HilbertDims) -> OperatorMatrix {
    let d = dims.spin_dim();
    let mut trip = Vec::with_capacity(dims.total_dim());
    for i1 in 0..d {
        for i2 in 0..d {
            for n in 0..dims.fock_cutoff {
                trip.push((dims.index(i2, i1, n), dims.index(i1, i2, n), ONE));
            }
        }
    }
    OperatorMatrix::from_triplets(dims.total_dim(), trip)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levi_civita_check(sm: &SpinMatrices) -> f64 {
        let ops = [&sm.x, &sm.y, &sm.z];
        let mut worst: f64 = 0.0;
        for a in 0..3 {
            let b = (a + 1) % 3;
            let c = (a + 2) % 3;
            let lhs = ops[a].commutator(ops[b]);
            let rhs = ops[c].scale(I);
            worst = worst.max(lhs.max_abs_diff(&rhs));
        }
        worst
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let sm = spin_matrices(Spin::new(0.5).unwrap());
        let x = sm.x.to_dense();
        assert_eq!(x[(0, 1)], C64::new(0.5, 0.0));
        assert_eq!(x[(1, 0)], C64::new(0.5, 0.0));
        assert_eq!(x[(0, 0)], ZERO);
        let z = sm.z.to_dense();
        assert_eq!(z[(0, 0)], C64::new(-0.5, 0.0));
        assert_eq!(z[(1, 1)], C64::new(0.5, 0.0));
    }

    #[test]
    fn spin_one_sz_diagonal() {
        let sm = spin_matrices(Spin::new(1.0).unwrap());
        let z = sm.z.to_dense();
        for (k, m) in [-1.0, 0.0, 1.0].iter().enumerate() {
            assert_eq!(z[(k, k)], C64::new(*m, 0.0));
        }
    }

    #[test]
    fn su2_algebra_and_casimir() {
        for s in [0.5, 1.0, 5.0, 6.0, 8.0] {
            let spin = Spin::new(s).unwrap();
            let sm = spin_matrices(spin);
            assert!(levi_civita_check(&sm) < 1e-12, "S={s}");
            let casimir = &(&sm.x.matmul(&sm.x) + &sm.y.matmul(&sm.y)) + &sm.z.matmul(&sm.z);
            let target = &OperatorMatrix::identity(spin.dim()) * (s * (s + 1.0));
            assert!(casimir.max_abs_diff(&target) < 1e-10, "S={s}");
            for op in [&sm.x, &sm.y, &sm.z] {
                assert!(op.hermiticity_error() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_non_half_integer_spin() {
        assert!(Spin::new(0.3).is_err());
        assert!(Spin::new(0.0).is_err());
        assert!(Spin::new(-1.0).is_err());
        assert!(Spin::new(2.5).is_ok());
        assert_eq!(Spin::new(2.5).unwrap().to_string(), "5/2");
    }

    #[test]
    fn ladder_entries() {
        let l = boson_ladder(3).unwrap();
        assert_eq!(l.a.get(0, 1), ONE);
        assert!((l.a.get(1, 2) - C64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(l.a.nnz(), 2);
        assert_eq!(l.a_dag, l.a.adjoint());

        let l1 = boson_ladder(1).unwrap();
        assert_eq!(l1.a.nnz(), 0);
        assert_eq!(l1.a.dim(), 1);

        let l16 = boson_ladder(16).unwrap();
        let n_op = l16.a_dag.matmul(&l16.a);
        assert!((n_op.get(5, 5) - C64::new(5.0, 0.0)).norm() < 1e-12);
        assert!(n_op.max_abs_diff(&l16.n) < 1e-12);
        assert!(boson_ladder(0).is_err());
    }

    #[test]
    fn ladder_commutator_truncation_artifact() {
        let n_max = 6;
        let l = boson_ladder(n_max).unwrap();
        let comm = l.a.commutator(&l.a_dag).to_dense();
        for k in 0..n_max - 1 {
            assert!((comm[(k, k)] - ONE).norm() < 1e-12);
        }
        assert!((comm[(n_max - 1, n_max - 1)] + C64::new((n_max - 1) as f64, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn embedded_slots_commute_and_stay_traceless() {
        let dims = HilbertDims::new(Spin::new(1.0).unwrap(), 2).unwrap();
        let sm = spin_matrices(dims.spin);
        let l = boson_ladder(dims.fock_cutoff).unwrap();
        let sz1 = embed(&sm.z, Slot::Spin1, &dims).unwrap();
        let a = embed(&l.a, Slot::Photon, &dims).unwrap();
        assert_eq!(sz1.dim(), 18);
        assert!(sz1.commutator(&a).max_abs() < 1e-12);
        assert!(sz1.trace().norm() < 1e-12);
        let sx2 = embed(&sm.x, Slot::Spin2, &dims).unwrap();
        assert!(sz1.commutator(&sx2).max_abs() < 1e-12);
        assert!(embed(&sm.z, Slot::Photon, &dims).is_err());
    }

    #[test]
    fn embed_preserves_spectrum() {
        let dims = HilbertDims::new(Spin::new(1.0).unwrap(), 2).unwrap();
        let sm = spin_matrices(dims.spin);
        let sx2 = embed(&sm.x, Slot::Spin2, &dims).unwrap();
        assert!(sx2.hermiticity_error() < 1e-14);
        let mut eig: Vec<f64> = sx2.to_dense().symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // each of -1, 0, 1 with multiplicity 3 * 2
        for (k, e) in eig.iter().enumerate() {
            let expected = (k / 6) as f64 - 1.0;
            assert!((e - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_is_an_involution() {
        let dims = HilbertDims::new(Spin::new(1.5).unwrap(), 3).unwrap();
        let p = spin_swap(&dims);
        let pp = p.matmul(&p);
        assert!(pp.max_abs_diff(&OperatorMatrix::identity(dims.total_dim())) < 1e-15);
        let (i1, i2, n) = dims.split(dims.index(2, 1, 2));
        assert_eq!((i1, i2, n), (2, 1, 2));
    }

    #[test]
    fn sparse_dense_consistency() {
        let sm = spin_matrices(Spin::new(2.0).unwrap());
        let prod = sm.x.matmul(&sm.y).to_dense();
        let dense = sm.x.to_dense() * sm.y.to_dense();
        assert!((prod - dense).iter().all(|v| v.norm() < 1e-14));
        let v: Vec<C64> = (0..5).map(|k| C64::new(k as f64, 1.0 - k as f64)).collect();
        let w = sm.plus.apply_vec(&v);
        let wd = sm.plus.to_dense() * nalgebra::DVector::from_vec(v.clone());
        for k in 0..5 {
            assert!((w[k] - wd[k]).norm() < 1e-14);
        }
    }
}
