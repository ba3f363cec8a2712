//! Adaptive Dormand–Prince 5(4) integrator over flat vectors of real or
//! complex numbers.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{OctdError, Result};

pub trait OdeScalar: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> + Send + Sync {
    fn magnitude(self) -> f64;
}

impl OdeScalar for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl OdeScalar for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-11 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth- minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Stateful stepper; the step size carries over between calls.
pub struct Dopri5<T: OdeScalar> {
    pub tol: Tolerances,
    pub h: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
    k: [Vec<T>; 7],
    tmp: Vec<T>,
    y_new: Vec<T>,
    pub accepted: usize,
    pub rejected: usize,
}

impl<T: OdeScalar> Dopri5<T> {
    pub fn new(dim: usize, tol: Tolerances) -> Self {
        let z = || vec![T::default(); dim];
        Self {
            tol,
            h: 1e-3,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
            k: [z(), z(), z(), z(), z(), z(), z()],
            tmp: z(),
            y_new: z(),
            accepted: 0,
            rejected: 0,
        }
    }

    fn stage(&mut self, y: &[T], h: f64, coeffs: &[f64]) {
        for i in 0..y.len() {
            let mut acc = y[i];
            for (j, &c) in coeffs.iter().enumerate() {
                if c != 0.0 {
                    acc = acc + self.k[j][i] * (h * c);
                }
            }
            self.tmp[i] = acc;
        }
    }

    /// One explicit step of size `h` from `(t, y)` without error control.
    /// Writes the fifth-order solution into `out` and returns the error norm.
    pub fn raw_step<F>(&mut self, f: &F, t: f64, y: &[T], h: f64, out: &mut [T]) -> f64
    where
        F: Fn(f64, &[T], &mut [T]),
    {
        let mut k0 = std::mem::take(&mut self.k[0]);
        f(t, y, &mut k0);
        self.k[0] = k0;
        let stages: [(f64, &[f64]); 5] = [
            (C2, &[A21]),
            (C3, &[A31, A32]),
            (C4, &[A41, A42, A43]),
            (C5, &[A51, A52, A53, A54]),
            (1.0, &[A61, A62, A63, A64, A65]),
        ];
        for (s, (c, coeffs)) in stages.iter().enumerate() {
            self.stage(y, h, coeffs);
            let mut ks = std::mem::take(&mut self.k[s + 1]);
            f(t + c * h, &self.tmp, &mut ks);
            self.k[s + 1] = ks;
        }
        for i in 0..y.len() {
            out[i] = y[i]
                + (self.k[0][i] * B1
                    + self.k[2][i] * B3
                    + self.k[3][i] * B4
                    + self.k[4][i] * B5
                    + self.k[5][i] * B6)
                    * h;
        }
        let mut k6 = std::mem::take(&mut self.k[6]);
        f(t + h, out, &mut k6);
        self.k[6] = k6;
        let mut err2 = 0.0;
        for i in 0..y.len() {
            let e = (self.k[0][i] * E1
                + self.k[2][i] * E3
                + self.k[3][i] * E4
                + self.k[4][i] * E5
                + self.k[5][i] * E6
                + self.k[6][i] * E7)
                * h;
            let sc = self.tol.atol + self.tol.rtol * y[i].magnitude().max(out[i].magnitude());
            let r = e.magnitude() / sc;
            err2 += r * r;
        }
        (err2 / y.len().max(1) as f64).sqrt()
    }

    /// Takes one accepted adaptive step not beyond `t_limit`; returns the new
    /// time. `y` is updated in place.
    pub fn step<F>(&mut self, f: &F, t: f64, y: &mut [T], t_limit: f64) -> Result<f64>
    where
        F: Fn(f64, &[T], &mut [T]),
    {
        loop {
            let remaining = t_limit - t;
            let mut h = self.h.min(self.h_max);
            let clipped = h >= remaining;
            if clipped {
                h = remaining;
            }
            let mut out = std::mem::take(&mut self.y_new);
            let err = self.raw_step(f, t, y, h, &mut out);
            if !err.is_finite() {
                self.y_new = out;
                return Err(OctdError::Integration { t, reason: "non-finite derivative".into() });
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                y.copy_from_slice(&out);
                self.y_new = out;
                self.accepted += 1;
                if !clipped {
                    self.h = h * factor;
                } else {
                    self.h = self.h.max(h * factor);
                }
                return Ok(if clipped { t_limit } else { t + h });
            }
            self.y_new = out;
            self.rejected += 1;
            self.h = h * factor.min(1.0);
            if self.h < self.h_min {
                return Err(OctdError::Integration { t, reason: "step size underflow".into() });
            }
        }
    }

    /// Integrates from `t` to `t_end`, updating `y` in place.
    pub fn advance<F>(&mut self, f: &F, mut t: f64, y: &mut [T], t_end: f64) -> Result<()>
    where
        F: Fn(f64, &[T], &mut [T]),
    {
        let mut steps = 0usize;
        while t < t_end {
            t = self.step(f, t, y, t_end)?;
            steps += 1;
            if steps > self.max_steps {
                return Err(OctdError::Integration { t, reason: "step budget exhausted".into() });
            }
        }
        Ok(())
    }
}
