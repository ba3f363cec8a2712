//! Mean-field dynamics in the large-spin limit.
//!
//! The scaled cavity field is `α = ⟨a⟩/√S = (x + ip)/√2` and the spins are unit
//! vectors `s_i = ⟨S_i⟩/S`. Coordinates are packed as
//! `[x, p, s1x, s1y, s1z, s2x, s2y, s2z]`.

mod decorrelator;
mod dynamics;
mod fixed_points;
mod integrate;
mod phase_diagram;
mod poincare;

pub use decorrelator::{decorrelator, growth_rate, DecorrelatorOptions, DecorrelatorSeries};
pub use dynamics::{
    class_one_residual, class_two_residual, dynamical_class_check, random_initial_states,
    saturation_distribution, ClassResiduals, Histogram, SaturationOptions,
};
pub use fixed_points::{
    catalog_entry, fixed_point_catalog, fsr_closed_form, stability, Classification, FixedPoint,
    FixedPointLabel, FsrClosedForm, StabilityReport, ZERO_TOL,
};
pub use integrate::{integrate, IntegrateOptions, Trajectory};
pub use phase_diagram::{classify_point, phase_diagram, PhaseCell, PhaseGrid, Region};
pub use poincare::{
    energy_shell_state, find_islands, poincare_section, IslandReport, PoincareOptions, Section,
    SectionPoint,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::ModelParams;

pub const DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub x: f64,
    pub p: f64,
    pub s1: [f64; 3],
    pub s2: [f64; 3],
}

fn bloch(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

impl ClassicalState {
    pub fn from_array(a: &[f64]) -> Self {
        Self { x: a[0], p: a[1], s1: [a[2], a[3], a[4]], s2: [a[5], a[6], a[7]] }
    }

    pub fn to_array(&self) -> [f64; DIM] {
        [self.x, self.p, self.s1[0], self.s1[1], self.s1[2], self.s2[0], self.s2[1], self.s2[2]]
    }

    /// Builds a state from the field quadratures and polar angles of each spin.
    pub fn from_angles(x: f64, p: f64, theta1: f64, phi1: f64, theta2: f64, phi2: f64) -> Self {
        Self { x, p, s1: bloch(theta1, phi1), s2: bloch(theta2, phi2) }
    }

    /// Builds a state from the canonical pairs `(z_i, φ_i)`.
    pub fn from_z_phi(x: f64, p: f64, z1: f64, phi1: f64, z2: f64, phi2: f64) -> Self {
        Self::from_angles(x, p, z1.clamp(-1.0, 1.0).acos(), phi1, z2.clamp(-1.0, 1.0).acos(), phi2)
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.x, self.p) / std::f64::consts::SQRT_2
    }

    /// Scaled photon number `|α|²`.
    pub fn photon_number(&self) -> f64 {
        0.5 * (self.x * self.x + self.p * self.p)
    }

    pub fn z1(&self) -> f64 {
        self.s1[2]
    }

    pub fn z2(&self) -> f64 {
        self.s2[2]
    }

    pub fn phi1(&self) -> f64 {
        self.s1[1].atan2(self.s1[0])
    }

    pub fn phi2(&self) -> f64 {
        self.s2[1].atan2(self.s2[0])
    }

    /// `(s1 + s2)/2`
    pub fn s_plus(&self) -> [f64; 3] {
        std::array::from_fn(|a| 0.5 * (self.s1[a] + self.s2[a]))
    }

    /// `(s1 - s2)/2`
    pub fn s_minus(&self) -> [f64; 3] {
        std::array::from_fn(|a| 0.5 * (self.s1[a] - self.s2[a]))
    }

    pub fn swapped(&self) -> Self {
        Self { s1: self.s2, s2: self.s1, ..*self }
    }

    /// Largest deviation of either spin from unit length.
    pub fn norm_error(&self) -> f64 {
        let n = |s: &[f64; 3]| (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        (n(&self.s1) - 1.0).abs().max((n(&self.s2) - 1.0).abs())
    }

    pub fn normalized(&self) -> Self {
        let unit = |s: &[f64; 3]| {
            let n = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
            [s[0] / n, s[1] / n, s[2] / n]
        };
        Self { s1: unit(&self.s1), s2: unit(&self.s2), ..*self }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Mean-field equations of motion, written into `out`.
pub fn eom_rhs_into(q: &[f64], p: &ModelParams, out: &mut [f64]) {
    let (x, pp) = (q[0], q[1]);
    let (s1, s2) = (&q[2..5], &q[5..8]);
    out[0] = p.omega_c * pp - 0.5 * p.kappa * x;
    out[1] = -p.omega_c * x - 0.5 * p.kappa * pp - p.lambda * (s1[2] + s2[2]);
    let field1 = p.lambda * x + p.v * s2[2];
    let field2 = p.lambda * x + p.v * s1[2];
    out[2] = -field1 * s1[1];
    out[3] = field1 * s1[0] + p.j * s1[2];
    out[4] = -p.j * s1[1];
    out[5] = -field2 * s2[1];
    out[6] = field2 * s2[0] + p.j * s2[2];
    out[7] = -p.j * s2[1];
}

pub fn eom_rhs(q: &ClassicalState, p: &ModelParams) -> ClassicalState {
    let mut out = [0.0; DIM];
    eom_rhs_into(&q.to_array(), p, &mut out);
    ClassicalState::from_array(&out)
}

/// Analytic Jacobian of [`eom_rhs`], row-major 8×8.
pub fn jacobian(q: &ClassicalState, p: &ModelParams) -> [[f64; DIM]; DIM] {
    let [x, _, a1, b1, c1, a2, b2, c2] = q.to_array();
    let (l, v, j) = (p.lambda, p.v, p.j);
    let f1 = l * x + v * c2;
    let f2 = l * x + v * c1;
    let mut m = [[0.0; DIM]; DIM];
    m[0][0] = -0.5 * p.kappa;
    m[0][1] = p.omega_c;
    m[1][0] = -p.omega_c;
    m[1][1] = -0.5 * p.kappa;
    m[1][4] = -l;
    m[1][7] = -l;
    // spin 1
    m[2][0] = -l * b1;
    m[2][3] = -f1;
    m[2][7] = -v * b1;
    m[3][0] = l * a1;
    m[3][2] = f1;
    m[3][4] = j;
    m[3][7] = v * a1;
    m[4][3] = -j;
    // spin 2
    m[5][0] = -l * b2;
    m[5][6] = -f2;
    m[5][4] = -v * b2;
    m[6][0] = l * a2;
    m[6][5] = f2;
    m[6][7] = j;
    m[6][4] = v * a2;
    m[7][6] = -j;
    m
}

/// Mean-field energy per spin magnitude,
/// `ω_c|α|² - J(s1x + s2x) + V s1z s2z + λ x (s1z + s2z)`; conserved at `κ = 0`.
pub fn energy(q: &ClassicalState, p: &ModelParams) -> f64 {
    p.omega_c * q.photon_number() - p.j * (q.s1[0] + q.s2[0])
        + p.v * q.s1[2] * q.s2[2]
        + p.lambda * q.x * (q.s1[2] + q.s2[2])
}
