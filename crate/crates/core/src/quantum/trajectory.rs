use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{OctdError, Result};
use crate::model::LindbladSpec;
use crate::operators::{HilbertDims, OperatorMatrix, C64, ZERO};
use crate::states::{norm, PureState};

use super::measure::Measurement;
use super::propagator::TaylorPropagator;

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryConfig {
    pub seed: u64,
    /// Upper bound on a single propagation step.
    pub dt_max: f64,
    /// Strictly increasing, starting at 0.
    pub sample_times: Vec<f64>,
    /// Width of the bracket left by the jump-time bisection.
    pub jump_time_tolerance: f64,
    /// Trajectories whose top-Fock-level population exceeds this are flagged.
    pub leakage_limit: f64,
    /// Keep the normalized state at each sample time.
    pub record_states: bool,
}

impl TrajectoryConfig {
    pub fn new(sample_times: Vec<f64>) -> Self {
        Self {
            seed: 0,
            dt_max: 0.5,
            sample_times,
            jump_time_tolerance: 1e-10,
            leakage_limit: 1e-6,
            record_states: false,
        }
    }

    /// `n` evenly spaced samples on `[0, t_end]`.
    pub fn uniform(t_end: f64, n: usize) -> Self {
        let times = if n <= 1 { vec![0.0] } else { (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect() };
        Self::new(times)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.sample_times;
        if t.first() != Some(&0.0) {
            return Err(OctdError::InvalidParams("sample times must start at 0".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(OctdError::InvalidParams("sample times must be strictly increasing".into()));
        }
        if !(self.dt_max > 0.0) || !(self.jump_time_tolerance > 0.0) {
            return Err(OctdError::InvalidParams("dt_max and jump_time_tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// `values[k]` holds every measurement label at `times[k]`.
    pub values: Vec<Vec<f64>>,
    pub states: Option<Vec<Vec<C64>>>,
    pub jump_times: Vec<f64>,
    pub max_leakage: f64,
    pub flagged: bool,
}

/// Population of the two highest Fock levels (photon levels `n ≥ 1` only).
pub fn fock_leakage(psi: &[C64], dims: &HilbertDims) -> f64 {
    let n_max = dims.fock_cutoff;
    let lo = n_max.saturating_sub(2).max(1);
    if lo >= n_max {
        return 0.0;
    }
    let total: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    let top: f64 = psi.chunks(n_max).map(|c| c[lo..].iter().map(|a| a.norm_sqr()).sum::<f64>()).sum();
    top / total
}

pub(crate) struct Unraveling<'a> {
    pub spec: &'a LindbladSpec,
    pub h_eff: OperatorMatrix,
}

impl<'a> Unraveling<'a> {
    pub fn new(spec: &'a LindbladSpec) -> Self {
        Self { spec, h_eff: spec.effective_hamiltonian() }
    }

    pub fn run(
        &self,
        psi0: &PureState,
        cfg: &TrajectoryConfig,
        measurements: &[&dyn Measurement],
    ) -> Result<TrajectoryRecord> {
        cfg.validate()?;
        let dims = &self.spec.dims;
        if psi0.dims != *dims {
            return Err(OctdError::DimensionMismatch { expected: dims.total_dim(), found: psi0.amplitudes.len() });
        }
        if (psi0.norm() - 1.0).abs() > 1e-10 {
            return Err(OctdError::InvalidParams("initial state is not normalized".into()));
        }
        let closed = self.spec.is_closed();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut prop = TaylorPropagator::new(&self.h_eff);
        let d = dims.total_dim();
        let mut psi = psi0.amplitudes.clone();
        let mut normalized = vec![ZERO; d];
        let mut rec = TrajectoryRecord {
            states: cfg.record_states.then(Vec::new),
            ..Default::default()
        };
        let mut threshold: f64 = if closed { 0.0 } else { rng.gen() };
        let mut t = 0.0;
        for &target in &cfg.sample_times {
            while t < target {
                let dt = (target - t).min(cfg.dt_max);
                let h = prop.prepare(&psi, dt)?;
                if !closed && prop.norm_sqr_at(h) < threshold {
                    let (mut lo, mut hi) = (0.0, h);
                    while hi - lo > cfg.jump_time_tolerance {
                        let mid = 0.5 * (lo + hi);
                        if prop.norm_sqr_at(mid) > threshold {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    prop.eval(hi, &mut psi);
                    t += hi;
                    self.jump(&mut psi, &mut rng)?;
                    rec.jump_times.push(t);
                    threshold = rng.gen();
                    continue;
                }
                prop.eval(h, &mut psi);
                t = if h >= target - t { target } else { t + h };
            }
            let n = norm(&psi);
            normalized.iter_mut().zip(&psi).for_each(|(o, a)| *o = a / n);
            let leak = fock_leakage(&normalized, dims);
            rec.max_leakage = rec.max_leakage.max(leak);
            let mut vals = Vec::new();
            for m in measurements {
                m.measure_pure(&normalized, &mut vals);
            }
            rec.times.push(target);
            rec.values.push(vals);
            if let Some(s) = rec.states.as_mut() {
                s.push(normalized.clone());
            }
        }
        rec.flagged = rec.max_leakage >= cfg.leakage_limit;
        Ok(rec)
    }

    /// Applies a jump chosen with probability `γ_k‖L_kψ‖²` and renormalizes.
    fn jump(&self, psi: &mut [C64], rng: &mut ChaCha8Rng) -> Result<()> {
        let candidates: Vec<(Vec<C64>, f64)> = self
            .spec
            .jumps
            .iter()
            .filter(|j| j.rate > 0.0)
            .map(|j| {
                let v = j.op.apply_vec(psi);
                let w = j.rate * v.iter().map(|a| a.norm_sqr()).sum::<f64>();
                (v, w)
            })
            .collect();
        let total: f64 = candidates.iter().map(|c| c.1).sum();
        if !(total > 0.0) {
            return Err(OctdError::Numeric("jump requested on a state annihilated by every jump operator".into()));
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = candidates.len() - 1;
        for (k, c) in candidates.iter().enumerate() {
            if pick < c.1 {
                chosen = k;
                break;
            }
            pick -= c.1;
        }
        let (v, _) = &candidates[chosen];
        let n = norm(v);
        psi.iter_mut().zip(v).for_each(|(o, a)| *o = a / n);
        Ok(())
    }
}

/// One quantum-jump trajectory: the unnormalized state follows
/// `H_eff = H - (i/2) Σ γ L†L` until its squared norm falls to a uniform
/// random threshold, the crossing time is bracketed by bisection, a jump is
/// applied and a fresh threshold drawn.
pub fn evolve_trajectory(
    psi0: &PureState,
    spec: &LindbladSpec,
    cfg: &TrajectoryConfig,
    measurements: &[&dyn Measurement],
) -> Result<TrajectoryRecord> {
    Unraveling::new(spec).run(psi0, cfg, measurements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_lindblad, ModelParams};
    use crate::operators::{boson_ladder, embed, Slot};
    use crate::quantum::measure::Expectation;
    use crate::quantum::unitary::unitary_evolve;
    use crate::states::{inner, product_state};
    use crate::classical::ClassicalState;

    #[test]
    fn closed_system_matches_unitary_evolution() {
        let p = ModelParams::new(1.4, 0.2, 0.0).with_spin(1.0, 6);
        let spec = build_lindblad(&p).unwrap();
        let q = ClassicalState::from_angles(0.3, 0.1, 1.0, 0.5, 2.0, -1.2);
        let psi0 = product_state(&q, &spec.dims).unwrap();
        let mut cfg = TrajectoryConfig::uniform(10.0, 11);
        cfg.record_states = true;
        let rec = evolve_trajectory(&psi0, &spec, &cfg, &[]).unwrap();
        assert!(rec.jump_times.is_empty());
        let reference = unitary_evolve(&psi0, &spec.hamiltonian, &cfg.sample_times).unwrap();
        for (a, b) in rec.states.unwrap().iter().zip(&reference) {
            assert!(inner(a, &b.amplitudes).norm_sqr() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn vacuum_sector_never_jumps() {
        let p = ModelParams::new(0.7, 0.0, 0.5).with_spin(1.0, 3);
        let spec = build_lindblad(&p).unwrap();
        let q = ClassicalState::from_angles(0.0, 0.0, 1.0, 0.5, 2.0, -1.2);
        let psi0 = product_state(&q, &spec.dims).unwrap();
        for seed in 0..20 {
            let cfg = TrajectoryConfig { seed, ..TrajectoryConfig::uniform(50.0, 6) };
            assert!(evolve_trajectory(&psi0, &spec, &cfg, &[]).unwrap().jump_times.is_empty());
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let p = ModelParams::new(1.4, 0.2, 0.3).with_spin(1.0, 4);
        let spec = build_lindblad(&p).unwrap();
        let dims = spec.dims;
        let mut amps = vec![ZERO; dims.total_dim()];
        amps[dims.index(0, 2, 1)] = C64::new(1.0, 0.0);
        let psi0 = PureState::new(dims, amps).unwrap();
        let n = Expectation::new("n", embed(&boson_ladder(4).unwrap().n, Slot::Photon, &dims).unwrap());
        let cfg = TrajectoryConfig { seed: 9, ..TrajectoryConfig::uniform(20.0, 21) };
        let a = evolve_trajectory(&psi0, &spec, &cfg, &[&n]).unwrap();
        let b = evolve_trajectory(&psi0, &spec, &cfg, &[&n]).unwrap();
        assert_eq!(a.jump_times, b.jump_times);
        assert_eq!(a.values, b.values);
        assert!(!a.jump_times.is_empty());
        let other = evolve_trajectory(&psi0, &spec, &TrajectoryConfig { seed: 10, ..cfg }, &[&n]).unwrap();
        assert_ne!(a.jump_times, other.jump_times);
    }

    #[test]
    fn leakage_counts_top_two_levels() {
        let dims = ModelParams::default().with_spin(0.5, 5).dims().unwrap();
        let mut amps = vec![ZERO; dims.total_dim()];
        amps[dims.index(0, 0, 0)] = C64::new(0.8, 0.0);
        amps[dims.index(1, 0, 4)] = C64::new(0.6, 0.0);
        assert!((fock_leakage(&amps, &dims) - 0.36).abs() < 1e-15);
        let tiny = ModelParams::default().with_spin(0.5, 1).dims().unwrap();
        assert_eq!(fock_leakage(&[C64::new(1.0, 0.0); 4], &tiny), 0.0);
    }

    #[test]
    fn rejects_bad_sample_times() {
        let p = ModelParams::new(1.0, 0.1, 0.1).with_spin(0.5, 2);
        let spec = build_lindblad(&p).unwrap();
        let psi0 = PureState::basis(spec.dims, 0, 0, 0);
        let cfg = TrajectoryConfig::new(vec![0.0, 1.0, 1.0]);
        assert!(evolve_trajectory(&psi0, &spec, &cfg, &[]).is_err());
        let cfg = TrajectoryConfig::new(vec![0.5, 1.0]);
        assert!(evolve_trajectory(&psi0, &spec, &cfg, &[]).is_err());
    }
}
