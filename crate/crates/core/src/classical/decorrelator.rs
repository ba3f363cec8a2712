use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{OctdError, Result};
use crate::model::ModelParams;
use crate::ode::{Dopri5, Tolerances};

use super::{eom_rhs_into, ClassicalState, DIM};

#[derive(Clone, Copy, Debug)]
pub struct DecorrelatorOptions {
    pub epsilon: f64,
    pub ensemble: usize,
    /// Member `i` draws its perturbation from a generator seeded with `seed + i`.
    pub seed: u64,
    pub t_end: f64,
    pub sample_dt: f64,
    pub tol: Tolerances,
}

impl Default for DecorrelatorOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            ensemble: 100,
            seed: 0,
            t_end: 4000.0,
            sample_dt: 1.0,
            tol: Tolerances { rtol: 1e-10, atol: 1e-13 },
        }
    }
}

#[derive(Clone, Debug)]
pub struct DecorrelatorSeries {
    pub times: Vec<f64>,
    pub d_ph: Vec<f64>,
    pub epsilon: f64,
    pub ensemble_size: usize,
}

impl DecorrelatorSeries {
    /// Index and value of the maximum.
    pub fn peak(&self) -> (usize, f64) {
        self.d_ph
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, d)| if d > best.1 { (i, d) } else { best })
    }

    /// Decades between the smallest positive value before the peak and the peak.
    pub fn growth_decades(&self) -> f64 {
        let (ip, dp) = self.peak();
        let lo = self.d_ph[..=ip].iter().copied().filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
        (dp / lo).log10()
    }

    /// Decades between the peak and the smallest value after it.
    pub fn decay_decades(&self) -> f64 {
        let (ip, dp) = self.peak();
        let lo = self.d_ph[ip..].iter().copied().fold(f64::INFINITY, f64::min);
        if lo <= 0.0 {
            return f64::INFINITY;
        }
        (dp / lo).log10()
    }
}

/// Random unit tangent perturbation of the two spins, scaled to total length `eps`.
fn tangent_kick(q: &ClassicalState, eps: f64, rng: &mut ChaCha8Rng) -> ClassicalState {
    let mut draw = |s: &[f64; 3]| loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if n2 > 1e-4 && n2 <= 1.0 {
            let dot = v[0] * s[0] + v[1] * s[1] + v[2] * s[2];
            break std::array::from_fn::<f64, 3, _>(|a| v[a] - dot * s[a]);
        }
    };
    let d1 = draw(&q.s1);
    let d2 = draw(&q.s2);
    let norm = d1.iter().chain(&d2).map(|v| v * v).sum::<f64>().sqrt();
    let scale = eps / norm;
    ClassicalState {
        s1: std::array::from_fn(|a| q.s1[a] + scale * d1[a]),
        s2: std::array::from_fn(|a| q.s2[a] + scale * d2[a]),
        ..*q
    }
    .normalized()
}

fn member_series(
    q0: &ClassicalState,
    params: &ModelParams,
    opts: &DecorrelatorOptions,
    member: usize,
    n_samples: usize,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(member as u64));
    let kicked = tangent_kick(q0, opts.epsilon, &mut rng);
    // reference and copy share one step sequence
    let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
        eom_rhs_into(&y[..DIM], params, &mut dy[..DIM]);
        eom_rhs_into(&y[DIM..], params, &mut dy[DIM..]);
    };
    let mut y = Vec::with_capacity(2 * DIM);
    y.extend_from_slice(&q0.to_array());
    y.extend_from_slice(&kicked.to_array());
    let mut ode = Dopri5::<f64>::new(2 * DIM, opts.tol);
    let dist = |y: &[f64]| 0.5 * ((y[0] - y[DIM]).powi(2) + (y[1] - y[DIM + 1]).powi(2));
    let mut out = Vec::with_capacity(n_samples);
    out.push(dist(&y));
    let mut t = 0.0;
    for k in 1..n_samples {
        let target = (k as f64 * opts.sample_dt).min(opts.t_end);
        ode.advance(&f, t, &mut y, target)?;
        t = target;
        out.push(dist(&y));
    }
    Ok(out)
}

/// Ensemble-averaged squared photon-field separation `⟨|α(t) - α'(t)|²⟩`
/// between a reference trajectory and copies whose spins are kicked by `ε`
/// along random tangent directions.
pub fn decorrelator(
    q0: &ClassicalState,
    params: &ModelParams,
    opts: &DecorrelatorOptions,
) -> Result<DecorrelatorSeries> {
    if !(opts.epsilon > 0.0) || opts.ensemble == 0 {
        return Err(OctdError::InvalidParams("epsilon must be positive and ensemble non-empty".into()));
    }
    if !(opts.t_end > 0.0) || !(opts.sample_dt > 0.0) {
        return Err(OctdError::InvalidParams("t_end and sample_dt must be positive".into()));
    }
    let mut n_samples = (opts.t_end / opts.sample_dt).floor() as usize + 1;
    if (n_samples - 1) as f64 * opts.sample_dt < opts.t_end {
        n_samples += 1;
    }
    let times: Vec<f64> =
        (0..n_samples).map(|k| (k as f64 * opts.sample_dt).min(opts.t_end)).collect();
    let members: Vec<Vec<f64>> = (0..opts.ensemble)
        .into_par_iter()
        .map(|i| member_series(q0, params, opts, i, n_samples))
        .collect::<Result<_>>()?;
    let mut d_ph = vec![0.0; n_samples];
    for m in &members {
        for (acc, v) in d_ph.iter_mut().zip(m) {
            *acc += v;
        }
    }
    for v in &mut d_ph {
        *v /= opts.ensemble as f64;
    }
    Ok(DecorrelatorSeries { times, d_ph, epsilon: opts.epsilon, ensemble_size: opts.ensemble })
}

/// Least-squares slope of `ln D_ph` over `[t_start, t_stop]`, skipping
/// non-positive entries. `None` when fewer than two points qualify.
pub fn growth_rate(series: &DecorrelatorSeries, t_start: f64, t_stop: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.d_ph)
        .filter(|(t, d)| **t >= t_start && **t <= t_stop && **d > 0.0)
        .map(|(t, d)| (*t, d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed_state() -> ClassicalState {
        ClassicalState::from_angles(0.0, 0.0, 1.0, 0.5, 2.0, -1.2)
    }

    #[test]
    fn kick_is_tangent_and_of_size_eps() {
        let q = seed_state();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = tangent_kick(&q, 1e-6, &mut rng);
        assert!(k.norm_error() < 1e-15);
        let d = (0..3).map(|a| (k.s1[a] - q.s1[a]).powi(2) + (k.s2[a] - q.s2[a]).powi(2)).sum::<f64>();
        assert!((d.sqrt() - 1e-6).abs() < 1e-12);
        assert_eq!((k.x, k.p), (q.x, q.p));
    }

    #[test]
    fn uncoupled_photon_never_decorrelates() {
        let p = ModelParams::new(0.5, 0.0, 0.3);
        let opts = DecorrelatorOptions { ensemble: 4, t_end: 50.0, ..Default::default() };
        let s = decorrelator(&seed_state(), &p, &opts).unwrap();
        assert!(s.d_ph.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn early_signal_scales_as_epsilon_squared() {
        let p = ModelParams::new(1.8, 0.2, 0.3);
        let base = DecorrelatorOptions { ensemble: 8, t_end: 40.0, ..Default::default() };
        let a = decorrelator(&seed_state(), &p, &base).unwrap();
        let b = decorrelator(&seed_state(), &p, &DecorrelatorOptions { epsilon: 2e-6, ..base }).unwrap();
        for k in 5..a.d_ph.len() {
            let r = b.d_ph[k] / a.d_ph[k];
            assert!((r - 4.0).abs() < 0.4, "t={} ratio {r}", a.times[k]);
        }
    }

    #[test]
    fn fitted_slope_of_pure_exponential() {
        let times: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let d_ph = times.iter().map(|t| 1e-12 * (0.3 * t).exp()).collect();
        let s = DecorrelatorSeries { times, d_ph, epsilon: 1e-6, ensemble_size: 1 };
        assert!((growth_rate(&s, 5.0, 40.0).unwrap() - 0.3).abs() < 1e-10);
        assert!(growth_rate(&s, 100.0, 200.0).is_none());
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        let p = ModelParams::new(1.8, 0.2, 0.3);
        let opts = DecorrelatorOptions { epsilon: 0.0, ..Default::default() };
        assert!(decorrelator(&seed_state(), &p, &opts).is_err());
    }
}
