use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OctdError, Result};
use crate::model::ModelParams;

use super::fixed_points::{catalog_entry, fixed_point_catalog, stability, Classification, FixedPointLabel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    I,
    II,
    III,
    None,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::None => "none",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseCell {
    pub lambda: f64,
    pub v: f64,
    pub region: Region,
    /// More than one of NP1, NP2, FSR1 attracts at these couplings.
    pub coexistence: bool,
    pub np1: Option<Classification>,
    pub np2: Option<Classification>,
    pub fsr1: Option<Classification>,
    /// FSR2 classified in the isolated system (`κ = 0`).
    pub fsr2_kappa0: Option<Classification>,
}

#[derive(Clone, Debug)]
pub struct PhaseGrid {
    pub kappa: f64,
    pub lambdas: Vec<f64>,
    pub vs: Vec<f64>,
    /// Row-major with `V` as the slow index: `cells[iv * lambdas.len() + il]`.
    pub cells: Vec<PhaseCell>,
}

impl PhaseGrid {
    pub fn cell(&self, il: usize, iv: usize) -> &PhaseCell {
        &self.cells[iv * self.lambdas.len() + il]
    }
}

fn attracting(c: Option<Classification>) -> bool {
    matches!(c, Some(Classification::PartialAttractor | Classification::Attractor))
}

fn classify(label: FixedPointLabel, p: &ModelParams) -> Option<Classification> {
    let cat = fixed_point_catalog(p);
    let fp = catalog_entry(&cat, label);
    stability(fp, p).ok().map(|r| r.classification)
}

/// Classifies one `(λ, V)` point. The region is named after the first of
/// NP1, NP2, FSR1 (in that order) that attracts.
pub fn classify_point(lambda: f64, v: f64, base: &ModelParams) -> PhaseCell {
    let p = ModelParams { lambda, v, ..*base };
    let closed = ModelParams { kappa: 0.0, ..p };
    let np1 = classify(FixedPointLabel::Np1, &p);
    let np2 = classify(FixedPointLabel::Np2Plus, &p);
    let fsr1 = classify(FixedPointLabel::Fsr1Plus, &p);
    let fsr2_kappa0 = classify(FixedPointLabel::Fsr2Plus, &closed);
    let flags = [attracting(np1), attracting(np2), attracting(fsr1)];
    let region = match flags {
        [true, ..] => Region::I,
        [false, true, _] => Region::II,
        [false, false, true] => Region::III,
        _ => Region::None,
    };
    let coexistence = flags.iter().filter(|f| **f).count() > 1;
    PhaseCell { lambda, v, region, coexistence, np1, np2, fsr1, fsr2_kappa0 }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Region map over an inclusive `lambda_range × v_range` grid of
/// `n_lambda × n_v` points.
pub fn phase_diagram(
    lambda_range: (f64, f64),
    n_lambda: usize,
    v_range: (f64, f64),
    n_v: usize,
    base: &ModelParams,
) -> Result<PhaseGrid> {
    if n_lambda == 0 || n_v == 0 || lambda_range.1 < lambda_range.0 || v_range.1 < v_range.0 {
        return Err(OctdError::InvalidParams("phase-diagram grid must be non-empty".into()));
    }
    let lambdas = linspace(lambda_range.0, lambda_range.1, n_lambda);
    let vs = linspace(v_range.0, v_range.1, n_v);
    let cells = (0..n_lambda * n_v)
        .into_par_iter()
        .map(|k| classify_point(lambdas[k % n_lambda], vs[k / n_lambda], base))
        .collect();
    Ok(PhaseGrid { kappa: base.kappa, lambdas, vs, cells })
}
