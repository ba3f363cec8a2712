//! Initial pure states: photon and spin coherent states and their products.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::Deserialize;

use crate::classical::ClassicalState;
use crate::error::{OctdError, Result};
use crate::operators::{HilbertDims, Spin, C64, ZERO};

/// Largest population allowed in the top Fock level of a coherent state.
pub const COHERENT_TAIL_LIMIT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    pub dims: HilbertDims,
    pub amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(dims: HilbertDims, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != dims.total_dim() {
            return Err(OctdError::DimensionMismatch { expected: dims.total_dim(), found: amplitudes.len() });
        }
        Ok(Self { dims, amplitudes })
    }

    /// Same as [`PureState::new`] followed by normalization.
    pub fn normalized(dims: HilbertDims, amplitudes: Vec<C64>) -> Result<Self> {
        let mut s = Self::new(dims, amplitudes)?;
        let n = s.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(OctdError::Numeric("cannot normalize a zero or non-finite vector".into()));
        }
        s.amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(s)
    }

    /// Basis state `|m1⟩|m2⟩|n⟩` addressed by slot indices.
    pub fn basis(dims: HilbertDims, i1: usize, i2: usize, n: usize) -> Self {
        let mut amplitudes = vec![ZERO; dims.total_dim()];
        amplitudes[dims.index(i1, i2, n)] = C64::new(1.0, 0.0);
        Self { dims, amplitudes }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    /// `|⟨self|other⟩|²`
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Writes `index,re,im` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["index", "re", "im"])?;
        for (i, a) in self.amplitudes.iter().enumerate() {
            wr.write_record(&[i.to_string(), format!("{:e}", a.re), format!("{:e}", a.im)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(dims: HilbertDims, r: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            index: usize,
            re: f64,
            im: f64,
        }
        let mut amplitudes = vec![ZERO; dims.total_dim()];
        let mut seen = 0;
        for row in csv::Reader::from_reader(r).deserialize() {
            let row: Row = row?;
            if row.index >= amplitudes.len() {
                return Err(OctdError::DimensionMismatch { expected: amplitudes.len(), found: row.index + 1 });
            }
            amplitudes[row.index] = C64::new(row.re, row.im);
            seen += 1;
        }
        if seen != amplitudes.len() {
            return Err(OctdError::DimensionMismatch { expected: amplitudes.len(), found: seen });
        }
        Self::new(dims, amplitudes)
    }
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Coherent state `e^{-|α|²/2} Σ αⁿ/√n! |n⟩` on `|0⟩..|n_max-1⟩`,
/// renormalized after truncation.
pub fn photon_coherent(alpha: Complex64, n_max: usize) -> Result<Vec<C64>> {
    if n_max == 0 {
        return Err(OctdError::InvalidParams("Fock cutoff must be at least 1".into()));
    }
    let mean = alpha.norm_sqr();
    let top = n_max - 1;
    if !(top == 0 && mean == 0.0) {
        let tail = if mean == 0.0 {
            0.0
        } else {
            (-mean + top as f64 * mean.ln() - ln_factorial(top as u32)).exp()
        };
        if tail >= COHERENT_TAIL_LIMIT {
            return Err(OctdError::InadequateCutoff { population: tail, limit: COHERENT_TAIL_LIMIT });
        }
    }
    let mut amps = Vec::with_capacity(n_max);
    let mut c = C64::new((-0.5 * mean).exp(), 0.0);
    for n in 0..n_max {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        amps.push(c);
    }
    let nrm = norm(&amps);
    amps.iter_mut().for_each(|a| *a /= nrm);
    Ok(amps)
}

/// `exp(-iφSz) exp(-iθSy) |S, S⟩` in the `m = -S..S` basis.
pub fn spin_coherent(theta: f64, phi: f64, spin: Spin) -> Vec<C64> {
    let two_s = spin.twice();
    let s = spin.value();
    let (c, sn) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    let ln_n = ln_factorial(two_s);
    (0..=two_s)
        .map(|k| {
            // k = S + m
            let m = k as f64 - s;
            let binom = (0.5 * (ln_n - ln_factorial(k) - ln_factorial(two_s - k))).exp();
            let mag = binom * c.powi(k as i32) * sn.powi((two_s - k) as i32);
            C64::from_polar(mag, -m * phi)
        })
        .collect()
}

/// Polar angles of a Bloch vector.
pub fn bloch_angles(s: &[f64; 3]) -> (f64, f64) {
    let r = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
    ((s[2] / r).clamp(-1.0, 1.0).acos(), s[1].atan2(s[0]))
}

pub fn kron3(a: &[C64], b: &[C64], c: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len() * c.len());
    for x in a {
        for y in b {
            let xy = x * y;
            out.extend(c.iter().map(|z| xy * z));
        }
    }
    out
}

/// Product of spin coherent states along `s1`, `s2` and a photon coherent
/// state with amplitude `√S·α`.
pub fn product_state(q: &ClassicalState, dims: &HilbertDims) -> Result<PureState> {
    for s in [&q.s1, &q.s2] {
        let r = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        if (r - 1.0).abs() > 1e-6 {
            return Err(OctdError::InvalidParams(format!("spin vector has length {r}, expected 1")));
        }
    }
    let (t1, p1) = bloch_angles(&q.s1);
    let (t2, p2) = bloch_angles(&q.s2);
    let spin1 = spin_coherent(t1, p1, dims.spin);
    let spin2 = spin_coherent(t2, p2, dims.spin);
    let photon = photon_coherent(q.alpha() * dims.spin.value().sqrt(), dims.fock_cutoff)?;
    let amplitudes = kron3(&spin1, &spin2, &photon);
    PureState::new(*dims, amplitudes)
}
