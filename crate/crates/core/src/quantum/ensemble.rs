use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{OctdError, Result};
use crate::model::LindbladSpec;
use crate::observables::{reduce, StateRef};
use crate::operators::{Slot, C64};
use crate::states::PureState;

use super::measure::Measurement;
use super::trajectory::{TrajectoryConfig, Unraveling};

#[derive(Clone, Debug)]
pub struct EnsembleOptions {
    pub n_traj: usize,
    /// Trajectory `i` uses seed `base_seed + i`.
    pub base_seed: u64,
    /// Also average `|ψ⟩⟨ψ|`, or a reduction of it.
    pub rho: Option<RhoAssembly>,
    /// Trajectories per parallel work unit.
    pub chunk: usize,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self { n_traj: 500, base_seed: 0, rho: None, chunk: 8 }
    }
}

/// Which density matrices an ensemble assembles.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RhoAssembly {
    /// Slots kept by the partial trace; empty keeps the full space.
    pub keep: Vec<Slot>,
    /// Sample indices to assemble at; `None` means every sample.
    pub samples: Option<Vec<usize>>,
}

impl RhoAssembly {
    pub fn full() -> Self {
        Self::default()
    }

    pub fn reduced(keep: Vec<Slot>, samples: Vec<usize>) -> Self {
        Self { keep, samples: Some(samples) }
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleResult {
    pub n_traj: usize,
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// `mean[label][time]`
    pub mean: Vec<Vec<f64>>,
    /// Standard error of the mean, same layout.
    pub stderr: Vec<Vec<f64>>,
    /// Averaged (possibly reduced) density matrices at `rho_times`.
    pub rho: Option<Vec<DMatrix<C64>>>,
    pub rho_times: Vec<f64>,
    pub jump_counts: Vec<usize>,
    pub max_leakage: f64,
    /// Indices of trajectories whose Fock leakage crossed the limit.
    pub flagged: Vec<usize>,
}

impl EnsembleResult {
    pub fn series(&self, label: &str) -> Option<&[f64]> {
        self.labels.iter().position(|l| l == label).map(|k| self.mean[k].as_slice())
    }

    pub fn stderr_of(&self, label: &str) -> Option<&[f64]> {
        self.labels.iter().position(|l| l == label).map(|k| self.stderr[k].as_slice())
    }
}

struct ChunkOut {
    values: Vec<Vec<Vec<f64>>>,
    jumps: Vec<usize>,
    leakage: Vec<(f64, bool)>,
    rho: Option<Vec<DMatrix<C64>>>,
}

/// Averages independent trajectories. Results do not depend on the thread
/// count: chunks are reduced in index order.
pub fn run_ensemble(
    psi0: &PureState,
    spec: &LindbladSpec,
    cfg: &TrajectoryConfig,
    measurements: &[&dyn Measurement],
    opts: &EnsembleOptions,
) -> Result<EnsembleResult> {
    if opts.n_traj == 0 {
        return Err(OctdError::InvalidParams("ensemble needs at least one trajectory".into()));
    }
    cfg.validate()?;
    let unravel = Unraveling::new(spec);
    let dims = spec.dims;
    let n_t = cfg.sample_times.len();
    let rho_at: Vec<usize> = match &opts.rho {
        None => Vec::new(),
        Some(RhoAssembly { samples: None, .. }) => (0..n_t).collect(),
        Some(RhoAssembly { samples: Some(s), .. }) => {
            if s.iter().any(|k| *k >= n_t) {
                return Err(OctdError::InvalidParams("density-matrix sample index out of range".into()));
            }
            s.clone()
        }
    };
    let keep: Vec<Slot> = match &opts.rho {
        Some(r) if !r.keep.is_empty() => r.keep.clone(),
        _ => vec![Slot::Spin1, Slot::Spin2, Slot::Photon],
    };
    let rd: usize = keep.iter().map(|s| dims.slot_dim(*s)).product();
    let chunk = opts.chunk.max(1);
    let starts: Vec<usize> = (0..opts.n_traj).step_by(chunk).collect();
    let chunks: Vec<ChunkOut> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + chunk).min(opts.n_traj);
            let mut out = ChunkOut {
                values: Vec::with_capacity(end - start),
                jumps: Vec::new(),
                leakage: Vec::new(),
                rho: opts.rho.as_ref().map(|_| vec![DMatrix::from_element(rd, rd, C64::new(0.0, 0.0)); rho_at.len()]),
            };
            for i in start..end {
                let c = TrajectoryConfig {
                    seed: opts.base_seed.wrapping_add(i as u64),
                    record_states: opts.rho.is_some(),
                    ..cfg.clone()
                };
                let rec = unravel.run(psi0, &c, measurements)?;
                if let (Some(acc), Some(states)) = (out.rho.as_mut(), rec.states.as_ref()) {
                    for (m, &k) in acc.iter_mut().zip(&rho_at) {
                        *m += reduce(StateRef::Pure(&states[k]), &dims, &keep)?;
                    }
                }
                out.jumps.push(rec.jump_times.len());
                out.leakage.push((rec.max_leakage, rec.flagged));
                out.values.push(rec.values);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let labels: Vec<String> = measurements.iter().flat_map(|m| m.labels()).collect();
    let n_l = labels.len();
    let n = opts.n_traj as f64;
    let mut mean = vec![vec![0.0; n_t]; n_l];
    for c in &chunks {
        for traj in &c.values {
            for (k, row) in traj.iter().enumerate() {
                for (l, v) in row.iter().enumerate() {
                    mean[l][k] += v;
                }
            }
        }
    }
    mean.iter_mut().flatten().for_each(|m| *m /= n);
    let mut var = vec![vec![0.0; n_t]; n_l];
    for c in &chunks {
        for traj in &c.values {
            for (k, row) in traj.iter().enumerate() {
                for (l, v) in row.iter().enumerate() {
                    var[l][k] += (v - mean[l][k]).powi(2);
                }
            }
        }
    }
    let stderr = var
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|s| if opts.n_traj > 1 { (s / (n - 1.0) / n).sqrt() } else { 0.0 })
                .collect()
        })
        .collect();

    let mut rho: Option<Vec<DMatrix<C64>>> = None;
    let mut jump_counts = Vec::with_capacity(opts.n_traj);
    let mut max_leakage = 0.0f64;
    let mut flagged = Vec::new();
    let mut idx = 0;
    for c in chunks {
        if let Some(part) = c.rho {
            match rho.as_mut() {
                None => rho = Some(part),
                Some(acc) => acc.iter_mut().zip(part).for_each(|(a, p)| *a += p),
            }
        }
        jump_counts.extend(c.jumps);
        for (leak, flag) in c.leakage {
            max_leakage = max_leakage.max(leak);
            if flag {
                flagged.push(idx);
            }
            idx += 1;
        }
    }
    if let Some(r) = rho.as_mut() {
        r.iter_mut().for_each(|m| *m /= C64::new(n, 0.0));
    }
    Ok(EnsembleResult {
        n_traj: opts.n_traj,
        times: cfg.sample_times.clone(),
        labels,
        mean,
        stderr,
        rho,
        rho_times: rho_at.iter().map(|k| cfg.sample_times[*k]).collect(),
        jump_counts,
        max_leakage,
        flagged,
    })
}
