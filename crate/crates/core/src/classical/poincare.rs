use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{OctdError, Result};
use crate::model::ModelParams;
use crate::ode::{Dopri5, Tolerances};

use super::fixed_points::{catalog_entry, fixed_point_catalog, FixedPointLabel};
use super::{energy, eom_rhs_into, ClassicalState, DIM};

#[derive(Clone, Copy, Debug)]
pub struct PoincareOptions {
    pub t_end: f64,
    pub tol: Tolerances,
    /// Trajectories whose energy wanders further than this (relative to
    /// `max(|E|, 1)`) are rejected.
    pub energy_tol: f64,
    /// Crossings are refined until `|p|` falls below this.
    pub crossing_tol: f64,
    /// Island search: seeds per branch, their spread in `(z, φ)`, and the RNG seed.
    pub island_seeds: usize,
    pub perturbation: f64,
    pub seed: u64,
    /// A seed is confined when all its section points stay within this
    /// distance of the branch in the `(z1, φ1)` plane.
    pub island_radius: f64,
    pub min_crossings: usize,
}

impl Default for PoincareOptions {
    fn default() -> Self {
        Self {
            t_end: 500.0,
            tol: Tolerances { rtol: 1e-11, atol: 1e-13 },
            energy_tol: 1e-7,
            crossing_tol: 1e-10,
            island_seeds: 12,
            perturbation: 0.05,
            seed: 0,
            island_radius: 0.4,
            min_crossings: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectionPoint {
    pub trajectory: usize,
    pub t: f64,
    pub z1: f64,
    pub phi1: f64,
    pub state: ClassicalState,
}

#[derive(Clone, Debug, Default)]
pub struct Section {
    pub points: Vec<SectionPoint>,
    /// Indices of trajectories dropped for leaving the energy shell.
    pub rejected: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct IslandReport {
    pub label: FixedPointLabel,
    pub center: (f64, f64),
    pub seeds: usize,
    pub confined: usize,
    /// Largest distance of any section point from the branch, per seed.
    pub dispersion: Vec<f64>,
    pub has_island: bool,
}

/// Completes `(z_i, φ_i)` to a state with `p = 0` on the energy shell `E` by
/// solving the quadratic for `x`; `root` picks the sign of the square root.
pub fn energy_shell_state(
    params: &ModelParams,
    e: f64,
    z1: f64,
    phi1: f64,
    z2: f64,
    phi2: f64,
    root: f64,
) -> Option<ClassicalState> {
    let q = ClassicalState::from_z_phi(0.0, 0.0, z1, phi1, z2, phi2);
    let a = 0.5 * params.omega_c;
    let b = params.lambda * (q.s1[2] + q.s2[2]);
    let c = energy(&q, params) - e;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let x = (-b + root.signum() * disc.sqrt()) / (2.0 * a);
    Some(ClassicalState { x, ..q })
}

fn wrap(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

fn trace_one(
    index: usize,
    q0: &ClassicalState,
    params: &ModelParams,
    opts: &PoincareOptions,
) -> Result<Option<Vec<SectionPoint>>> {
    let f = |_t: f64, y: &[f64], dy: &mut [f64]| eom_rhs_into(y, params, dy);
    let mut ode = Dopri5::<f64>::new(DIM, opts.tol);
    let e0 = energy(q0, params);
    let scale = e0.abs().max(1.0);
    let mut y = q0.to_array().to_vec();
    let mut prev = y.clone();
    let mut probe = vec![0.0; DIM];
    let mut t = 0.0;
    let mut points = Vec::new();
    let mut steps = 0usize;
    while t < opts.t_end {
        prev.copy_from_slice(&y);
        let t_prev = t;
        t = ode.step(&f, t, &mut y, opts.t_end)?;
        steps += 1;
        if steps > ode.max_steps {
            return Err(OctdError::Integration { t, reason: "step budget exhausted".into() });
        }
        let q = ClassicalState::from_array(&y);
        if (energy(&q, params) - e0).abs() > opts.energy_tol * scale {
            return Ok(None);
        }
        if prev[1] > 0.0 && y[1] <= 0.0 {
            let (mut lo, mut hi) = (0.0, t - t_prev);
            let mut tau = hi;
            probe.copy_from_slice(&y);
            for _ in 0..200 {
                if probe[1].abs() < opts.crossing_tol {
                    break;
                }
                tau = 0.5 * (lo + hi);
                ode.raw_step(&f, t_prev, &prev, tau, &mut probe);
                if probe[1] > 0.0 {
                    lo = tau;
                } else {
                    hi = tau;
                }
            }
            let s = ClassicalState::from_array(&probe);
            points.push(SectionPoint { trajectory: index, t: t_prev + tau, z1: s.z1(), phi1: s.phi1(), state: s });
        }
    }
    Ok(Some(points))
}

/// Crossings of the isolated-system flow through `p = 0` with `ṗ < 0`,
/// projected onto `(z1, φ1)`.
pub fn poincare_section(
    initial: &[ClassicalState],
    params: &ModelParams,
    opts: &PoincareOptions,
) -> Result<Section> {
    if params.kappa != 0.0 {
        return Err(OctdError::InvalidParams("Poincaré sections require kappa = 0".into()));
    }
    let traced: Vec<Option<Vec<SectionPoint>>> = initial
        .par_iter()
        .enumerate()
        .map(|(i, q)| trace_one(i, q, params, opts))
        .collect::<Result<_>>()?;
    let mut out = Section::default();
    for (i, t) in traced.into_iter().enumerate() {
        match t {
            Some(pts) => out.points.extend(pts),
            None => out.rejected.push(i),
        }
    }
    Ok(out)
}

/// Seeds on the FSR2 energy shell scattered around one branch.
fn branch_seeds(
    params: &ModelParams,
    center: &ClassicalState,
    opts: &PoincareOptions,
    salt: u64,
) -> Vec<ClassicalState> {
    let e = energy(center, params);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ salt);
    let root = if center.x >= 0.0 { 1.0 } else { -1.0 };
    let mut seeds = Vec::with_capacity(opts.island_seeds);
    let mut tries = 0;
    while seeds.len() < opts.island_seeds && tries < 1000 * opts.island_seeds.max(1) {
        tries += 1;
        let mut jitter = || opts.perturbation * rng.gen_range(-1.0..1.0);
        let z1 = (center.z1() + jitter()).clamp(-1.0, 1.0);
        let phi1 = center.phi1() + jitter();
        let z2 = (center.z2() + jitter()).clamp(-1.0, 1.0);
        let phi2 = center.phi2() + jitter();
        let candidates = [root, -root]
            .into_iter()
            .filter_map(|r| energy_shell_state(params, e, z1, phi1, z2, phi2, r));
        if let Some(q) = candidates.min_by(|a, b| (a.x - center.x).abs().total_cmp(&(b.x - center.x).abs())) {
            seeds.push(q);
        }
    }
    seeds
}

/// Looks for regular islands around the two FSR2 branches of the isolated
/// system by tracking how far the section points of nearby seeds wander.
pub fn find_islands(params: &ModelParams, opts: &PoincareOptions) -> Result<Vec<IslandReport>> {
    let closed = ModelParams { kappa: 0.0, ..*params };
    let cat = fixed_point_catalog(&closed);
    let mut reports = Vec::with_capacity(2);
    for (salt, label) in [(1u64, FixedPointLabel::Fsr2Plus), (2, FixedPointLabel::Fsr2Minus)] {
        let fp = catalog_entry(&cat, label);
        if !fp.exists {
            return Err(OctdError::MissingFixedPoint(label.to_string()));
        }
        let center = (fp.state.z1(), fp.state.phi1());
        let seeds = branch_seeds(&closed, &fp.state, opts, salt);
        let section = poincare_section(&seeds, &closed, opts)?;
        let mut dispersion = vec![f64::INFINITY; seeds.len()];
        let mut counts = vec![0usize; seeds.len()];
        let mut worst = vec![0.0f64; seeds.len()];
        for pt in &section.points {
            let d = ((pt.z1 - center.0).powi(2) + wrap(pt.phi1 - center.1).powi(2)).sqrt();
            worst[pt.trajectory] = worst[pt.trajectory].max(d);
            counts[pt.trajectory] += 1;
        }
        for i in 0..seeds.len() {
            if !section.rejected.contains(&i) && counts[i] >= opts.min_crossings {
                dispersion[i] = worst[i];
            }
        }
        let confined = dispersion.iter().filter(|d| **d < opts.island_radius).count();
        let has_island = !seeds.is_empty() && 2 * confined >= seeds.len();
        reports.push(IslandReport { label, center, seeds: seeds.len(), confined, dispersion, has_island });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_state_has_requested_energy() {
        let p = ModelParams::new(2.0, 0.2, 0.0);
        for root in [1.0, -1.0] {
            let q = energy_shell_state(&p, 2.0, 0.3, 2.0, -0.4, 2.5, root).unwrap();
            assert!((energy(&q, &p) - 2.0).abs() < 1e-12);
            assert_eq!(q.p, 0.0);
        }
        assert!(energy_shell_state(&p, -10.0, 0.0, 0.0, 0.0, 0.0, 1.0).is_none());
    }

    #[test]
    fn crossings_are_refined_and_one_sided() {
        let p = ModelParams::new(1.4, 0.2, 0.0);
        let q0 = ClassicalState::from_angles(0.5, 0.3, 1.0, 0.5, 2.0, -1.2);
        let opts = PoincareOptions { t_end: 60.0, ..Default::default() };
        let s = poincare_section(&[q0], &p, &opts).unwrap();
        assert!(s.rejected.is_empty());
        assert!(s.points.len() >= 5);
        for pt in &s.points {
            assert!(pt.state.p.abs() < 1e-10);
            let mut d = [0.0; DIM];
            eom_rhs_into(&pt.state.to_array(), &p, &mut d);
            assert!(d[1] < 0.0);
        }
    }

    #[test]
    fn integrable_limit_gives_curves() {
        // λ = V = 0: spin 1 rotates rigidly about x, so s1x is constant on the section
        let p = ModelParams::new(0.0, 0.0, 0.0);
        let q0 = ClassicalState::from_angles(1.0, 0.0, 1.2, 0.4, 0.7, -1.0);
        let opts = PoincareOptions { t_end: 200.0, ..Default::default() };
        let s = poincare_section(&[q0], &p, &opts).unwrap();
        assert!(s.points.len() > 20);
        for pt in &s.points {
            assert!((pt.state.s1[0] - q0.s1[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn lossy_flow_is_rejected() {
        let p = ModelParams::new(1.4, 0.2, 0.1);
        let q0 = ClassicalState::from_angles(0.0, 0.0, 1.0, 0.5, 2.0, -1.2);
        assert!(poincare_section(&[q0], &p, &PoincareOptions::default()).is_err());
    }

    #[test]
    fn angle_wrapping() {
        assert!((wrap(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap(-PI), PI);
        assert!((wrap(0.1) - 0.1).abs() < 1e-15);
    }
}
