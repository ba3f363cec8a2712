use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classical::{catalog_entry, fixed_point_catalog, ClassicalState, FixedPointLabel};
use crate::error::{OctdError, Result};
use crate::model::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    FixedPoints,
    PhaseDiagram,
    ClassicalEvolve,
    Decorrelator,
    Poincare,
    Saturation,
    QuantumEvolve,
    ScarNp1,
    ScarFsr2,
    SyncObservables,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::FixedPoints,
        Experiment::PhaseDiagram,
        Experiment::ClassicalEvolve,
        Experiment::Decorrelator,
        Experiment::Poincare,
        Experiment::Saturation,
        Experiment::QuantumEvolve,
        Experiment::ScarNp1,
        Experiment::ScarFsr2,
        Experiment::SyncObservables,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::FixedPoints => "fixed-points",
            Experiment::PhaseDiagram => "phase-diagram",
            Experiment::ClassicalEvolve => "classical-evolve",
            Experiment::Decorrelator => "decorrelator",
            Experiment::Poincare => "poincare",
            Experiment::Saturation => "saturation",
            Experiment::QuantumEvolve => "quantum-evolve",
            Experiment::ScarNp1 => "scar-np1",
            Experiment::ScarFsr2 => "scar-fsr2",
            Experiment::SyncObservables => "sync-observables",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = OctdError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| OctdError::Config(format!("unknown experiment '{s}'")))
    }
}

pub fn parse_label(s: &str) -> Result<FixedPointLabel> {
    FixedPointLabel::ALL
        .into_iter()
        .find(|l| l.to_string().eq_ignore_ascii_case(s))
        .ok_or_else(|| OctdError::Config(format!("unknown fixed point '{s}'")))
}

/// Initial condition shared by the classical and quantum runs. Quantum runs
/// use the product coherent state centred on the classical point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    /// A catalog entry such as `NP1` or `FSR2+`. FSR2 is taken from the
    /// isolated system, where it is defined.
    FixedPoint { label: String },
    Angles {
        #[serde(default)]
        x: f64,
        #[serde(default)]
        p: f64,
        theta1: f64,
        phi1: f64,
        theta2: f64,
        phi2: f64,
    },
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Angles { x: 0.0, p: 0.0, theta1: 0.8, phi1: 0.6, theta2: 1.2, phi2: 0.3 }
    }
}

impl InitialState {
    /// A generic point of the chaotic sea used as a contrast seed.
    pub fn generic() -> Self {
        InitialState::Angles { x: 0.0, p: 0.0, theta1: 1.0, phi1: 0.5, theta2: 2.0, phi2: -1.2 }
    }

    pub fn resolve(&self, params: &ModelParams) -> Result<ClassicalState> {
        match self {
            InitialState::Angles { x, p, theta1, phi1, theta2, phi2 } => {
                Ok(ClassicalState::from_angles(*x, *p, *theta1, *phi1, *theta2, *phi2))
            }
            InitialState::FixedPoint { label } => {
                let label = parse_label(label)?;
                let at = match label {
                    FixedPointLabel::Fsr2Plus | FixedPointLabel::Fsr2Minus => ModelParams { kappa: 0.0, ..*params },
                    _ => *params,
                };
                let cat = fixed_point_catalog(&at);
                let fp = catalog_entry(&cat, label);
                if !fp.exists {
                    return Err(OctdError::MissingFixedPoint(label.to_string()));
                }
                Ok(fp.state)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub n_lambda: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub n_v: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { lambda_min: 0.0, lambda_max: 1.5, n_lambda: 101, v_min: 0.0, v_max: 2.5, n_v: 101 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalSection {
    pub t_end: f64,
    pub sample_dt: f64,
    pub initial: InitialState,
}

impl Default for ClassicalSection {
    fn default() -> Self {
        Self { t_end: 400.0, sample_dt: 0.1, initial: InitialState::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecorrelatorSection {
    pub epsilon: f64,
    pub ensemble: usize,
    pub t_end: f64,
    pub sample_dt: f64,
    pub initial: InitialState,
    /// Window `[start, stop]` for the exponential growth-rate fit.
    pub fit_window: [f64; 2],
}

impl Default for DecorrelatorSection {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            ensemble: 100,
            t_end: 4000.0,
            sample_dt: 1.0,
            initial: InitialState::default(),
            fit_window: [10.0, 60.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoincareSection {
    pub t_end: f64,
    /// Extra trajectories started at random points of the FSR2 energy shell.
    pub shell_trajectories: usize,
    pub find_islands: bool,
    pub island_seeds: usize,
    pub perturbation: f64,
}

impl Default for PoincareSection {
    fn default() -> Self {
        Self { t_end: 500.0, shell_trajectories: 40, find_islands: true, island_seeds: 12, perturbation: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaturationSection {
    pub members: usize,
    pub t_end: f64,
    pub tail_fraction: f64,
    pub bins: usize,
}

impl Default for SaturationSection {
    fn default() -> Self {
        Self { members: 64, t_end: 500.0, tail_fraction: 0.2, bins: 40 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantumSection {
    pub t_end: f64,
    pub n_samples: usize,
    pub n_traj: usize,
    pub dt_max: f64,
    pub initial: InitialState,
    /// Contrast seed for survival comparisons.
    pub compare: Option<InitialState>,
    /// Times at which reduced spin-1 Husimi grids are written.
    pub husimi_times: Vec<f64>,
    pub husimi_res: usize,
    pub leakage_limit: f64,
    pub fail_on_leakage: bool,
    /// Individual trajectories dumped alongside the ensemble, with spectra.
    pub dump_trajectories: usize,
}

impl Default for QuantumSection {
    fn default() -> Self {
        Self {
            t_end: 50.0,
            n_samples: 501,
            n_traj: 200,
            dt_max: 0.5,
            initial: InitialState::default(),
            compare: None,
            husimi_times: Vec::new(),
            husimi_res: crate::observables::DEFAULT_HUSIMI_RES,
            leakage_limit: 1e-6,
            fail_on_leakage: true,
            dump_trajectories: 0,
        }
    }
}

/// Parsed run configuration. Unknown keys anywhere are errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub recipe: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub params: ModelParams,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub classical: ClassicalSection,
    #[serde(default)]
    pub decorrelator: DecorrelatorSection,
    #[serde(default)]
    pub poincare: PoincareSection,
    #[serde(default)]
    pub saturation: SaturationSection,
    #[serde(default)]
    pub quantum: QuantumSection,
}

impl RunConfig {
    pub fn new(experiment: Experiment, params: ModelParams) -> Self {
        Self {
            experiment,
            recipe: None,
            seed: 0,
            out: None,
            params,
            grid: GridSection::default(),
            classical: ClassicalSection::default(),
            decorrelator: DecorrelatorSection::default(),
            poincare: PoincareSection::default(),
            saturation: SaturationSection::default(),
            quantum: QuantumSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| OctdError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| OctdError::Config(e.to_string()))
    }

    /// Reads a TOML config, or the `config` object of a run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text)?;
            let c = v.get("config").ok_or_else(|| OctdError::Config("manifest has no 'config' entry".into()))?;
            let cfg: RunConfig = serde_json::from_value(c.clone()).map_err(|e| OctdError::Config(e.to_string()))?;
            cfg.validate()?;
            return Ok(cfg);
        }
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let q = &self.quantum;
        let bad = |m: &str| Err(OctdError::Config(m.to_string()));
        if self.seed > i64::MAX as u64 {
            return bad("seed must not exceed 2^63 - 1 so that it survives a TOML round trip");
        }
        if self.grid.n_lambda == 0 || self.grid.n_v == 0 {
            return bad("grid sizes must be positive");
        }
        if !(self.classical.t_end > 0.0 && self.classical.sample_dt > 0.0) {
            return bad("classical t_end and sample_dt must be positive");
        }
        if !(q.t_end > 0.0) || q.n_samples < 2 || q.n_traj == 0 || !(q.dt_max > 0.0) {
            return bad("quantum t_end, n_samples >= 2, n_traj and dt_max must be positive");
        }
        if q.husimi_times.iter().any(|t| *t < 0.0 || *t > q.t_end) {
            return bad("husimi_times must lie in [0, t_end]");
        }
        if q.husimi_res < 2 {
            return bad("husimi_res must be at least 2");
        }
        if !(self.saturation.tail_fraction > 0.0 && self.saturation.tail_fraction <= 1.0) {
            return bad("tail_fraction must lie in (0, 1]");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
experiment = "scar-np1"
seed = 7

[params]
v = 1.5
lambda = 0.5
kappa = 0.1
spin = 5.0
n_max = 16

[quantum]
t_end = 50.0
n_traj = 100
husimi_times = [0.0, 10.0]
initial = { kind = "fixed-point", label = "NP1" }
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = RunConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.experiment, Experiment::ScarNp1);
        assert_eq!(c.params.omega_c, 1.0);
        assert_eq!(c.quantum.initial, InitialState::FixedPoint { label: "NP1".into() });
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = SAMPLE.replace("n_traj", "ntraj");
        assert!(matches!(RunConfig::from_toml(&typo), Err(OctdError::Config(_))));
        let top = format!("lambda = 0.3\n{SAMPLE}");
        assert!(RunConfig::from_toml(&top).is_err());
        let kind = SAMPLE.replace("fixed-point", "fixed-pt");
        assert!(RunConfig::from_toml(&kind).is_err());
    }

    #[test]
    fn negative_kappa_is_a_config_error() {
        let e = RunConfig::from_toml(&SAMPLE.replace("kappa = 0.1", "kappa = -0.1")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn experiment_names() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("phase".parse::<Experiment>().is_err());
    }

    #[test]
    fn initial_states_resolve() {
        let p = ModelParams::new(1.4, 0.2, 0.1);
        let q = InitialState::FixedPoint { label: "fsr2+".into() }.resolve(&p).unwrap();
        assert!(q.z1() > 0.0 && q.x.abs() > 0.0 && q.p == 0.0);
        assert!(InitialState::FixedPoint { label: "FSR1+".into() }.resolve(&p).is_err());
    }
}
