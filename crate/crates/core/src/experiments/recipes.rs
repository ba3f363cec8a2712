use crate::model::ModelParams;

use super::config::{Experiment, InitialState, RunConfig};

#[derive(Clone, Debug)]
pub struct Recipe {
    pub name: &'static str,
    pub description: &'static str,
    pub config: RunConfig,
}

fn cfg(exp: Experiment, name: &str, v: f64, lambda: f64, kappa: f64, spin: f64, n_max: usize) -> RunConfig {
    let mut c = RunConfig::new(exp, ModelParams::new(v, lambda, kappa).with_spin(spin, n_max));
    c.recipe = Some(name.to_string());
    c
}

fn sync(name: &str, v: f64, lambda: f64, t_end: f64, n_max: usize) -> RunConfig {
    let mut c = cfg(Experiment::SyncObservables, name, v, lambda, 0.3, 6.0, n_max);
    c.quantum.t_end = t_end;
    c.quantum.n_samples = (t_end / 2.0) as usize + 1;
    c
}

fn fsr2(name: &str, v: f64, kappa: f64, spin: f64, n_max: usize, husimi: &[f64]) -> RunConfig {
    let mut c = cfg(Experiment::ScarFsr2, name, v, 0.2, kappa, spin, n_max);
    c.quantum.t_end = if husimi.iter().any(|t| *t > 50.0) { 80.0 } else { 50.0 };
    c.quantum.n_samples = (c.quantum.t_end * 10.0) as usize + 1;
    c.quantum.initial = InitialState::FixedPoint { label: "FSR2+".into() };
    c.quantum.compare = Some(InitialState::generic());
    c.quantum.husimi_times = husimi.to_vec();
    c
}

/// Named parameter sets for each figure family.
pub fn list_recipes() -> Vec<Recipe> {
    let mut out = Vec::new();
    let mut push = |name: &'static str, description: &'static str, config: RunConfig| {
        out.push(Recipe { name, description, config });
    };

    let mut c = cfg(Experiment::PhaseDiagram, "fig1b-phase-diagram", 0.0, 0.0, 0.3, 1.0, 2);
    c.grid = Default::default();
    push("fig1b-phase-diagram", "region map in the (lambda, V) plane at kappa = 0.3", c);

    let mut c = cfg(Experiment::Decorrelator, "fig1d-decorrelator", 1.8, 0.2, 0.3, 1.0, 2);
    c.decorrelator.t_end = 5000.0;
    push("fig1d-decorrelator", "photon-field decorrelator in region II", c);

    push("fig2-regionI", "single trajectories and ensemble, region I", sync("fig2-regionI", 0.5, 0.5, 300.0, 18));
    push("fig2-regionII", "single trajectories and ensemble, region II", sync("fig2-regionII", 1.8, 0.2, 1500.0, 12));

    let mut c = cfg(Experiment::ScarNp1, "fig3a-d-np1-scar", 1.5, 0.5, 0.1, 5.0, 18);
    c.quantum.initial = InitialState::FixedPoint { label: "NP1".into() };
    c.quantum.compare = Some(InitialState::generic());
    c.quantum.husimi_times = vec![5.0, 10.0, 15.0];
    push("fig3a-d-np1-scar", "survival and Husimi snapshots from NP1", c);

    push(
        "fig3e-h-fsr2-scar",
        "branch overlaps and Husimi snapshots from unstable FSR2",
        fsr2("fig3e-h-fsr2-scar", 1.4, 0.1, 5.0, 28, &[5.0, 15.0, 30.0]),
    );

    let mut c = cfg(Experiment::ClassicalEvolve, "figS1-regionI", 0.5, 0.5, 0.3, 1.0, 2);
    c.classical.t_end = 400.0;
    push("figS1-regionI", "mean-field dynamics in region I", c);
    let mut c = cfg(Experiment::ClassicalEvolve, "figS1-regionII", 1.8, 0.2, 0.3, 1.0, 2);
    c.classical.t_end = 3000.0;
    push("figS1-regionII", "mean-field dynamics in region II", c);

    let c = cfg(Experiment::Saturation, "figS2-saturation", 0.5, 1.3, 0.3, 1.0, 2);
    push("figS2-saturation", "late-time photon number distribution in region III", c);

    push("figS3-regionI", "phase and imbalance fluctuations, region I", sync("figS3-regionI", 0.5, 0.5, 300.0, 18));
    push("figS3-regionII", "phase and imbalance fluctuations, region II", sync("figS3-regionII", 1.8, 0.2, 1500.0, 12));

    let mut c = sync("figS4-time-crystal", 0.5, 0.5, 300.0, 18);
    c.quantum.dump_trajectories = 2;
    push("figS4-time-crystal", "two trajectories from one coherent state and their spectra", c);

    push("figS5-nointeraction", "synchronization without spin-spin coupling", sync("figS5-nointeraction", 0.0, 0.5, 300.0, 18));

    push(
        "figS6-stable-fsr2",
        "isolated dynamics from stable FSR2",
        fsr2("figS6-stable-fsr2", 2.0, 0.0, 8.0, 44, &[0.0, 50.0]),
    );
    let mut c = cfg(Experiment::Poincare, "figS6-poincare", 2.0, 0.2, 0.0, 1.0, 2);
    c.poincare.find_islands = true;
    push("figS6-poincare", "Poincare section around stable FSR2", c);

    push(
        "figS7-unstable-fsr2",
        "isolated dynamics from unstable FSR2",
        fsr2("figS7-unstable-fsr2", 1.4, 0.0, 8.0, 38, &[30.0, 60.0]),
    );
    push(
        "figS7-unstable-fsr2-lossy",
        "lossy counterpart of the unstable FSR2 run",
        fsr2("figS7-unstable-fsr2-lossy", 1.4, 0.1, 8.0, 30, &[30.0]),
    );
    let c = cfg(Experiment::Poincare, "figS7-poincare", 1.4, 0.2, 0.0, 1.0, 2);
    push("figS7-poincare", "Poincare section around unstable FSR2", c);

    out
}

pub fn find_recipe(name: &str) -> Option<Recipe> {
    list_recipes().into_iter().find(|r| r.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recipe_parameters() {
        let p = find_recipe("fig2-regionI").unwrap().config.params;
        assert_eq!((p.v, p.lambda, p.kappa, p.spin), (0.5, 0.5, 0.3, 6.0));
        let p = find_recipe("figS6-stable-fsr2").unwrap().config.params;
        assert_eq!((p.v, p.lambda, p.kappa, p.spin), (2.0, 0.2, 0.0, 8.0));
        let p = find_recipe("figS5-nointeraction").unwrap().config.params;
        assert_eq!((p.v, p.lambda, p.kappa, p.spin), (0.0, 0.5, 0.3, 6.0));
    }

    #[test]
    fn every_recipe_is_valid_and_unique() {
        let all = list_recipes();
        for r in &all {
            r.config.validate().unwrap();
            assert_eq!(r.config.recipe.as_deref(), Some(r.name));
            assert_eq!(all.iter().filter(|o| o.name == r.name).count(), 1);
        }
        for family in ["fig1d", "fig2", "fig3a", "fig3e", "figS1", "figS2", "figS3", "figS4", "figS5", "figS6", "figS7"] {
            assert!(all.iter().any(|r| r.name.starts_with(family)), "{family}");
        }
    }
}
