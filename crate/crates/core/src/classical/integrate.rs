use crate::error::{OctdError, Result};
use crate::model::ModelParams;
use crate::ode::{Dopri5, Tolerances};

use super::{eom_rhs_into, ClassicalState, DIM};

#[derive(Clone, Copy, Debug)]
pub struct IntegrateOptions {
    pub tol: Tolerances,
    /// Spacing of the stored samples.
    pub sample_dt: f64,
    /// Runs whose spin norms drift further than this are rejected.
    pub norm_drift_limit: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { tol: Tolerances { rtol: 1e-11, atol: 1e-13 }, sample_dt: 0.1, norm_drift_limit: 1e-8 }
    }
}

impl IntegrateOptions {
    pub fn sampled_every(sample_dt: f64) -> Self {
        Self { sample_dt, ..Self::default() }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ClassicalState>,
    pub max_norm_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &ClassicalState {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Integrates the mean-field equations from `q0` to `t_end`, sampling every
/// `opts.sample_dt` (plus the end point).
pub fn integrate(
    q0: &ClassicalState,
    params: &ModelParams,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    if !(t_end > 0.0) || !(opts.sample_dt > 0.0) {
        return Err(OctdError::InvalidParams("t_end and sample_dt must be positive".into()));
    }
    let f = |_t: f64, y: &[f64], dy: &mut [f64]| eom_rhs_into(y, params, dy);
    let mut ode = Dopri5::<f64>::new(DIM, opts.tol);
    let mut y = q0.to_array().to_vec();
    let n_samples = (t_end / opts.sample_dt).floor() as usize;
    let mut times = Vec::with_capacity(n_samples + 2);
    let mut states = Vec::with_capacity(n_samples + 2);
    times.push(0.0);
    states.push(*q0);
    let mut max_norm_drift = q0.norm_error();
    let mut t = 0.0;
    let mut k = 1usize;
    loop {
        let target = (k as f64 * opts.sample_dt).min(t_end);
        ode.advance(&f, t, &mut y, target)?;
        t = target;
        let q = ClassicalState::from_array(&y);
        max_norm_drift = max_norm_drift.max(q.norm_error());
        if max_norm_drift > opts.norm_drift_limit {
            return Err(OctdError::Integration {
                t,
                reason: format!("spin-norm drift {max_norm_drift:.2e} exceeds limit"),
            });
        }
        times.push(t);
        states.push(q);
        if t >= t_end {
            break;
        }
        k += 1;
    }
    Ok(Trajectory { times, states, max_norm_drift })
}
