use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{OctdError, Result};
use crate::model::ModelParams;

use super::{integrate, ClassicalState, IntegrateOptions, Trajectory};

/// Distances from the two reduced phase spaces at each sample.
///
/// Class I (anti-symmetric, photon-free) is `x = p = 0`, `s1x = s2x`,
/// `s1y = -s2y`, `s1z = -s2z`; class II (symmetric) is `s1 = s2`.
#[derive(Clone, Debug, Default)]
pub struct ClassResiduals {
    pub times: Vec<f64>,
    pub class_one: Vec<f64>,
    pub class_two: Vec<f64>,
}

pub fn class_one_residual(q: &ClassicalState) -> f64 {
    let (sp, sm) = (q.s_plus(), q.s_minus());
    [q.x, q.p, sm[0], sp[1], sp[2]].iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn class_two_residual(q: &ClassicalState) -> f64 {
    q.s_minus().iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn dynamical_class_check(traj: &Trajectory) -> ClassResiduals {
    ClassResiduals {
        times: traj.times.clone(),
        class_one: traj.states.iter().map(class_one_residual).collect(),
        class_two: traj.states.iter().map(class_two_residual).collect(),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SaturationOptions {
    pub t_end: f64,
    /// Fraction of the run, counted from the end, that is time-averaged.
    pub tail_fraction: f64,
    pub sample_dt: f64,
    pub bins: usize,
    /// Values spread over less than this collapse into a single bin.
    pub resolution: f64,
}

impl Default for SaturationOptions {
    fn default() -> Self {
        Self { t_end: 500.0, tail_fraction: 0.2, sample_dt: 0.1, bins: 40, resolution: 1e-4 }
    }
}

#[derive(Clone, Debug)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Per-member late-time averages, in input order.
    pub values: Vec<f64>,
}

impl Histogram {
    pub fn from_values(values: Vec<f64>, bins: usize, resolution: f64) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() || hi - lo < resolution || bins <= 1 {
            let edges = if values.is_empty() { vec![0.0, 0.0] } else { vec![lo, hi] };
            return Self { edges, counts: vec![values.len()], values };
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let mut counts = vec![0usize; bins];
        for v in &values {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Self { edges, counts, values }
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|c| **c > 0).count()
    }
}

/// Initial states with spins uniform on their spheres and an empty cavity.
pub fn random_initial_states(n: usize, seed: u64) -> Vec<ClassicalState> {
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let mut z_phi = || (rng.gen_range(-1.0..1.0), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
            let (z1, phi1) = z_phi();
            let (z2, phi2) = z_phi();
            ClassicalState::from_z_phi(0.0, 0.0, z1, phi1, z2, phi2)
        })
        .collect()
}

/// Late-time photon number `|α|²` averaged over the final `tail_fraction` of
/// each run, collected into a histogram.
pub fn saturation_distribution(
    initial: &[ClassicalState],
    params: &ModelParams,
    opts: &SaturationOptions,
) -> Result<Histogram> {
    if !(opts.tail_fraction > 0.0 && opts.tail_fraction <= 1.0) {
        return Err(OctdError::InvalidParams("tail_fraction must lie in (0, 1]".into()));
    }
    let iopts = IntegrateOptions::sampled_every(opts.sample_dt);
    let t_tail = opts.t_end * (1.0 - opts.tail_fraction);
    let values: Vec<f64> = initial
        .par_iter()
        .map(|q0| {
            let traj = integrate(q0, params, opts.t_end, &iopts)?;
            let tail: Vec<f64> = traj
                .times
                .iter()
                .zip(&traj.states)
                .filter(|(t, _)| **t >= t_tail)
                .map(|(_, q)| q.photon_number())
                .collect();
            Ok(tail.iter().sum::<f64>() / tail.len() as f64)
        })
        .collect::<Result<_>>()?;
    Ok(Histogram::from_values(values, opts.bins, opts.resolution))
}
