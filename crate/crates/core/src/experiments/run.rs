use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::classical::{
    decorrelator, dynamical_class_check, energy, energy_shell_state, find_islands, fixed_point_catalog,
    growth_rate, integrate, phase_diagram, poincare_section, random_initial_states, saturation_distribution,
    stability, DecorrelatorOptions, FixedPointLabel, IntegrateOptions, PoincareOptions, SaturationOptions,
};
use crate::error::{OctdError, Result};
use crate::model::{build_lindblad, ModelParams};
use crate::observables::{
    collective_measurements, fourier_spectrum, fsr2_branch_states, husimi, reduce, HusimiGrid,
    PhaseObservables, StateRef,
};
use crate::operators::{Slot, C64};
use crate::quantum::{
    evolve_trajectory, run_ensemble, unitary_evolve, EnsembleOptions, EnsembleResult, Measurement, Overlap,
    RhoAssembly, TrajectoryConfig,
};
use crate::states::{product_state, PureState};

use super::config::{Experiment, InitialState, RunConfig};

/// Files written by a run plus a JSON summary of headline numbers.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunReport {
    pub outputs: Vec<String>,
    pub summary: Value,
    pub max_leakage: Option<f64>,
    pub flagged_trajectories: usize,
}

struct Sink<'a> {
    dir: &'a Path,
    report: RunReport,
}

impl<'a> Sink<'a> {
    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        self.report.outputs.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        std::fs::write(self.dir.join(name), serde_json::to_string_pretty(v)?)?;
        self.report.outputs.push(name.to_string());
        Ok(())
    }

    fn note_leakage(&mut self, e: &EnsembleResult) {
        let m = self.report.max_leakage.unwrap_or(0.0).max(e.max_leakage);
        self.report.max_leakage = Some(m);
        self.report.flagged_trajectories += e.flagged.len();
    }
}

fn f(v: f64) -> String {
    format!("{v:.17e}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Runs one experiment into `out_dir` and writes `manifest.json` next to its
/// artifacts. Leakage beyond the configured limit is reported as an error
/// after all files are written.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunReport> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let mut sink = Sink { dir: out_dir, report: RunReport::default() };
    let summary = match cfg.experiment {
        Experiment::FixedPoints => fixed_points(cfg, &mut sink)?,
        Experiment::PhaseDiagram => phase(cfg, &mut sink)?,
        Experiment::ClassicalEvolve => classical(cfg, &mut sink)?,
        Experiment::Decorrelator => decorr(cfg, &mut sink)?,
        Experiment::Poincare => poincare(cfg, &mut sink)?,
        Experiment::Saturation => saturation(cfg, &mut sink)?,
        Experiment::QuantumEvolve | Experiment::SyncObservables => sync(cfg, &mut sink)?,
        Experiment::ScarNp1 | Experiment::ScarFsr2 => scar(cfg, &mut sink)?,
    };
    sink.report.summary = summary;
    let manifest = json!({
        "tool": "octd",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment.name(),
        "recipe": cfg.recipe,
        "seed": cfg.seed,
        "threads": rayon::current_num_threads(),
        "wall_time_s": start.elapsed().as_secs_f64(),
        "config": cfg,
        "outputs": sink.report.outputs,
        "summary": sink.report.summary,
        "max_leakage": sink.report.max_leakage,
        "flagged_trajectories": sink.report.flagged_trajectories,
    });
    std::fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    let report = sink.report;
    if cfg.quantum.fail_on_leakage && report.flagged_trajectories > 0 {
        return Err(OctdError::Leakage {
            leakage: report.max_leakage.unwrap_or(0.0),
            flagged: report.flagged_trajectories,
        });
    }
    Ok(report)
}

/// Output directory: explicit value, then the config, then `$OCTD_OUT`, then `octd-out`.
pub fn resolve_out_dir(cli: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    if let Some(p) = cli.or(cfg.out.as_deref()) {
        return p.to_path_buf();
    }
    let root = std::env::var_os("OCTD_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("octd-out"));
    root.join(cfg.recipe.as_deref().unwrap_or(cfg.experiment.name()))
}

fn fixed_points(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    let p = &cfg.params;
    let cat = fixed_point_catalog(p);
    let mut rows = Vec::new();
    let mut eig_rows = Vec::new();
    for fp in &cat {
        let s = &fp.state;
        let rep = if fp.exists { Some(stability(fp, p)?) } else { None };
        if let Some(r) = &rep {
            for (k, e) in r.eigenvalues.iter().enumerate() {
                eig_rows.push(vec![fp.label.to_string(), k.to_string(), f(e.re), f(e.im)]);
            }
        }
        rows.push(vec![
            fp.label.to_string(),
            fp.exists.to_string(),
            f(s.x),
            f(s.p),
            f(s.s1[0]),
            f(s.s1[1]),
            f(s.s1[2]),
            f(s.s2[0]),
            f(s.s2[1]),
            f(s.s2[2]),
            if fp.exists { f(fp.residual(p)) } else { String::new() },
            opt(rep.as_ref().map(|r| r.classification)),
            opt(rep.as_ref().map(|r| r.negative_count)),
            opt(rep.as_ref().map(|r| r.zero_count)),
            opt(rep.as_ref().map(|r| r.positive_count)),
        ]);
    }
    sink.csv(
        "fixed_points.csv",
        &["label", "exists", "x", "p", "s1x", "s1y", "s1z", "s2x", "s2y", "s2z", "residual", "classification", "negative", "zero", "positive"],
        rows,
    )?;
    sink.csv("eigenvalues.csv", &["label", "k", "re", "im"], eig_rows)?;
    Ok(json!({ "existing": cat.iter().filter(|c| c.exists).map(|c| c.label.to_string()).collect::<Vec<_>>() }))
}

fn phase(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    let g = &cfg.grid;
    let grid = phase_diagram((g.lambda_min, g.lambda_max), g.n_lambda, (g.v_min, g.v_max), g.n_v, &cfg.params)?;
    let rows = grid.cells.iter().map(|c| {
        vec![
            f(c.lambda),
            f(c.v),
            c.region.to_string(),
            c.coexistence.to_string(),
            opt(c.np1),
            opt(c.np2),
            opt(c.fsr1),
            opt(c.fsr2_kappa0),
        ]
    });
    sink.csv("phase_diagram.csv", &["lambda", "v", "region", "coexistence", "np1", "np2", "fsr1", "fsr2_kappa0"], rows)?;
    let mut counts = std::collections::BTreeMap::new();
    for c in &grid.cells {
        *counts.entry(c.region.to_string()).or_insert(0usize) += 1;
    }
    Ok(json!({ "kappa": grid.kappa, "region_counts": counts }))
}

fn classical(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    let p = &cfg.params;
    let c = &cfg.classical;
    let q0 = c.initial.resolve(p)?;
    let traj = integrate(&q0, p, c.t_end, &IntegrateOptions::sampled_every(c.sample_dt))?;
    let res = dynamical_class_check(&traj);
    let rows = traj.times.iter().zip(&traj.states).enumerate().map(|(k, (t, q))| {
        vec![
            f(*t),
            f(q.x),
            f(q.p),
            f(q.photon_number()),
            f(q.s1[0]),
            f(q.s1[1]),
            f(q.s1[2]),
            f(q.s2[0]),
            f(q.s2[1]),
            f(q.s2[2]),
            f(q.z1()),
            f(q.phi1()),
            f(q.z2()),
            f(q.phi2()),
            f(q.s_plus()[2]),
            f(q.s_minus()[2]),
            f(res.class_one[k]),
            f(res.class_two[k]),
            f(energy(q, p)),
        ]
    });
    sink.csv(
        "trajectory.csv",
        &["t", "x", "p", "n", "s1x", "s1y", "s1z", "s2x", "s2y", "s2z", "z1", "phi1", "z2", "phi2", "s_plus_z", "s_minus_z", "class_one", "class_two", "energy"],
        rows,
    )?;
    let last = traj.last();
    Ok(json!({
        "final_photon_number": last.photon_number(),
        "final_class_one_residual": res.class_one.last(),
        "max_norm_drift": traj.max_norm_drift,
    }))
}

fn decorr(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    let d = &cfg.decorrelator;
    let q0 = d.initial.resolve(&cfg.params)?;
    let opts = DecorrelatorOptions {
        epsilon: d.epsilon,
        ensemble: d.ensemble,
        seed: cfg.seed,
        t_end: d.t_end,
        sample_dt: d.sample_dt,
        ..Default::default()
    };
    let s = decorrelator(&q0, &cfg.params, &opts)?;
    sink.csv("decorrelator.csv", &["t", "d_ph"], s.times.iter().zip(&s.d_ph).map(|(t, v)| vec![f(*t), f(*v)]))?;
    let (peak, peak_val) = s.peak();
    Ok(json!({
        "peak_time": s.times[peak],
        "peak_value": peak_val,
        "growth_decades": s.growth_decades(),
        "decay_decades": s.decay_decades(),
        "growth_rate": growth_rate(&s, d.fit_window[0], d.fit_window[1]),
    }))
}

fn poincare(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    let p = ModelParams { kappa: 0.0, ..cfg.params };
    let ps = &cfg.poincare;
    let opts = PoincareOptions {
        t_end: ps.t_end,
        island_seeds: ps.island_seeds,
        perturbation: ps.perturbation,
        seed: cfg.seed,
        ..Default::default()
    };
    let centre = InitialState::FixedPoint { label: "FSR2+".into() }.resolve(&p)?;
    let e = energy(&centre, &p);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut seeds = Vec::new();
    let mut tries = 0;
    while seeds.len() < ps.shell_trajectories && tries < 10_000 {
        tries += 1;
        let mut zp = || (rng.gen_range(-1.0..1.0), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        let ((z1, f1), (z2, f2)) = (zp(), zp());
        let root = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        if let Some(q) = energy_shell_state(&p, e, z1, f1, z2, f2, root) {
            seeds.push(q);
        }
    }
    let section = poincare_section(&seeds, &p, &opts)?;
    let rows = section.points.iter().map(|pt| vec![pt.trajectory.to_string(), f(pt.t), f(pt.z1), f(pt.phi1)]);
    sink.csv("section.csv", &["trajectory", "t", "z1", "phi1"], rows)?;
    let mut summary = json!({ "energy": e, "trajectories": seeds.len(), "rejected": section.rejected.len() });
    if ps.find_islands {
        let islands = find_islands(&p, &opts)?;
        let v: Vec<Value> = islands
            .iter()
            .map(|r| {
                json!({
                    "label": r.label.to_string(),
                    "center_z1": r.center.0,
                    "center_phi1": r.center.1,
                    "seeds": r.seeds,
                    "confined": r.confined,
                    "dispersion": r.dispersion.iter().map(|d| if d.is_finite() { Some(*d) } else { None }).collect::<Vec<_>>(),
                    "has_island": r.has_island,
                })
            })
            .collect();
        sink.json("islands.json", &Value::Array(v.clone()))?;
        summary["islands"] = Value::Array(v);
    }
    Ok(summary)
}

fn saturation(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    let s = &cfg.saturation;
    let init = random_initial_states(s.members, cfg.seed);
    let opts = SaturationOptions { t_end: s.t_end, tail_fraction: s.tail_fraction, bins: s.bins, ..Default::default() };
    let h = saturation_distribution(&init, &cfg.params, &opts)?;
    sink.csv("saturation_values.csv", &["member", "n_sat"], h.values.iter().enumerate().map(|(i, v)| vec![i.to_string(), f(*v)]))?;
    let rows = h.counts.iter().enumerate().map(|(k, c)| vec![f(h.edges[k]), f(h.edges[k + 1]), c.to_string()]);
    sink.csv("saturation_hist.csv", &["bin_lo", "bin_hi", "count"], rows)?;
    Ok(json!({ "occupied_bins": h.occupied_bins(), "members": h.values.len() }))
}

fn trajectory_config(cfg: &RunConfig) -> TrajectoryConfig {
    let q = &cfg.quantum;
    TrajectoryConfig {
        dt_max: q.dt_max,
        leakage_limit: q.leakage_limit,
        ..TrajectoryConfig::uniform(q.t_end, q.n_samples)
    }
}

fn series_rows(e: &EnsembleResult, derived: &[(&str, &str, &str)]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["t".to_string()];
    for l in &e.labels {
        header.push(format!("{l}_mean"));
        header.push(format!("{l}_stderr"));
    }
    for (name, _, _) in derived {
        header.push(name.to_string());
    }
    let rows = (0..e.times.len())
        .map(|k| {
            let mut r = vec![f(e.times[k])];
            for l in 0..e.labels.len() {
                r.push(f(e.mean[l][k]));
                r.push(f(e.stderr[l][k]));
            }
            for (_, sq, m) in derived {
                let (sq, m) = (e.series(sq).unwrap()[k], e.series(m).unwrap()[k]);
                r.push(f(sq - m * m));
            }
            r
        })
        .collect();
    (header, rows)
}

/// Variances assembled from ensemble means of `A²` and `A`.
const DERIVED: [(&str, &str, &str); 4] = [
    ("var_z_plus", "z_plus_sq", "z_plus"),
    ("var_z_minus", "z_minus_sq", "z_minus"),
    ("var_phi_plus", "phi_plus_sq", "phi_plus"),
    ("var_phi1", "phi1_sq", "phi1"),
];

fn sync(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    let spec = build_lindblad(&cfg.params)?;
    let q = &cfg.quantum;
    let psi0 = product_state(&q.initial.resolve(&cfg.params)?, &spec.dims)?;
    let coll = collective_measurements(&spec.dims)?;
    let phase = PhaseObservables::new(spec.dims);
    let mut ms: Vec<&dyn Measurement> = coll.iter().map(|m| m as &dyn Measurement).collect();
    ms.push(&phase);
    let tcfg = trajectory_config(cfg);
    let opts = EnsembleOptions { n_traj: q.n_traj, base_seed: cfg.seed, ..Default::default() };
    let e = run_ensemble(&psi0, &spec, &tcfg, &ms, &opts)?;
    sink.note_leakage(&e);
    let (header, rows) = series_rows(&e, &DERIVED);
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    sink.csv("observables.csv", &header, rows)?;

    if q.dump_trajectories > 0 {
        let labels: Vec<String> = ms.iter().flat_map(|m| m.labels()).collect();
        let mut traj_rows = Vec::new();
        let mut spec_rows = Vec::new();
        let mut peaks = Vec::new();
        for i in 0..q.dump_trajectories {
            let c = TrajectoryConfig { seed: cfg.seed.wrapping_add(i as u64), ..tcfg.clone() };
            let rec = evolve_trajectory(&psi0, &spec, &c, &ms)?;
            for (t, vals) in rec.times.iter().zip(&rec.values) {
                let mut r = vec![i.to_string(), f(*t)];
                r.extend(vals.iter().map(|v| f(*v)));
                traj_rows.push(r);
            }
            for name in ["z_minus", "phi_minus"] {
                let col = labels.iter().position(|l| l == name).unwrap();
                let series: Vec<f64> = rec.values.iter().map(|v| v[col]).collect();
                let sp = fourier_spectrum(&rec.times, &series)?;
                peaks.push(json!({ "trajectory": i, "label": name, "dominant_frequency": sp.dominant_frequency() }));
                for (fr, pw) in sp.frequencies.iter().zip(&sp.power) {
                    spec_rows.push(vec![i.to_string(), name.to_string(), f(*fr), f(*pw)]);
                }
            }
        }
        let mut header = vec!["trajectory".to_string(), "t".to_string()];
        header.extend(labels.iter().cloned());
        let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        sink.csv("trajectories.csv", &header, traj_rows)?;
        sink.csv("spectra.csv", &["trajectory", "label", "frequency", "power"], spec_rows)?;
        return Ok(json!({ "n_traj": e.n_traj, "spectral_peaks": peaks }));
    }
    let last = e.times.len() - 1;
    Ok(json!({
        "n_traj": e.n_traj,
        "final": {
            "n_scaled": e.series("n_scaled").unwrap()[last],
            "z_plus": e.series("z_plus").unwrap()[last],
            "phi_plus": e.series("phi_plus").unwrap()[last],
        }
    }))
}

fn nearest_samples(times: &[f64], wanted: &[f64]) -> Vec<usize> {
    wanted
        .iter()
        .map(|w| (0..times.len()).min_by(|a, b| (times[*a] - w).abs().total_cmp(&(times[*b] - w).abs())).unwrap())
        .collect()
}

fn write_husimi(sink: &mut Sink, label: &str, t: f64, g: &HusimiGrid) -> Result<()> {
    let mut rows = Vec::with_capacity(g.z.len() * g.phi.len());
    for (i, z) in g.z.iter().enumerate() {
        for (j, ph) in g.phi.iter().enumerate() {
            rows.push(vec![f(*z), f(*ph), f(g.q[(i, j)]), f(g.raw[(i, j)])]);
        }
    }
    sink.csv(&format!("husimi_{label}_t{t:.3}.csv"), &["z", "phi", "q", "raw"], rows)
}

fn scar(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    let q = &cfg.quantum;
    let p = &cfg.params;
    let spec = build_lindblad(p)?;
    let dims = spec.dims;
    let (psi0, other): (PureState, Option<PureState>) = match cfg.experiment {
        Experiment::ScarFsr2 => {
            let (c1, c2) = fsr2_branch_states(p)?;
            (c1, Some(c2))
        }
        _ => (product_state(&q.initial.resolve(p)?, &dims)?, None),
    };
    let compare = match &q.compare {
        Some(c) => Some(product_state(&c.resolve(p)?, &dims)?),
        None => None,
    };
    let tcfg = trajectory_config(cfg);
    let husimi_idx = nearest_samples(&tcfg.sample_times, &q.husimi_times);
    let mut overlaps = vec![Overlap::new("f1", psi0.amplitudes.clone())];
    if let Some(o) = &other {
        overlaps.push(Overlap::new("f2", o.amplitudes.clone()));
    }
    let ms: Vec<&dyn Measurement> = overlaps.iter().map(|m| m as &dyn Measurement).collect();

    // columns: label -> (mean, stderr)
    let mut columns: Vec<(String, Vec<f64>, Vec<f64>)> = Vec::new();
    let mut spin1: Vec<(f64, nalgebra::DMatrix<C64>)> = Vec::new();
    if spec.is_closed() {
        let states = unitary_evolve(&psi0, &spec.hamiltonian, &tcfg.sample_times)?;
        for m in &ms {
            let mut rows = Vec::new();
            for s in &states {
                let mut v = Vec::new();
                m.measure_pure(&s.amplitudes, &mut v);
                rows.push(v[0]);
            }
            columns.push((m.labels()[0].clone(), rows, vec![0.0; states.len()]));
        }
        for &k in &husimi_idx {
            spin1.push((tcfg.sample_times[k], reduce(StateRef::Pure(&states[k].amplitudes), &dims, &[Slot::Spin1])?));
        }
    } else {
        let opts = EnsembleOptions {
            n_traj: q.n_traj,
            base_seed: cfg.seed,
            rho: (!husimi_idx.is_empty()).then(|| RhoAssembly::reduced(vec![Slot::Spin1], husimi_idx.clone())),
            ..Default::default()
        };
        let e = run_ensemble(&psi0, &spec, &tcfg, &ms, &opts)?;
        sink.note_leakage(&e);
        for (l, label) in e.labels.iter().enumerate() {
            columns.push((label.clone(), e.mean[l].clone(), e.stderr[l].clone()));
        }
        if let Some(r) = e.rho {
            spin1 = e.rho_times.iter().copied().zip(r).collect();
        }
    }
    if let Some(c) = &compare {
        let sv = Overlap::new("f_generic", c.amplitudes.clone());
        if spec.is_closed() {
            let states = unitary_evolve(c, &spec.hamiltonian, &tcfg.sample_times)?;
            let vals = states.iter().map(|s| crate::states::inner(&c.amplitudes, &s.amplitudes).norm_sqr()).collect();
            columns.push(("f_generic".into(), vals, vec![0.0; states.len()]));
        } else {
            let opts = EnsembleOptions { n_traj: q.n_traj, base_seed: cfg.seed, ..Default::default() };
            let e = run_ensemble(c, &spec, &tcfg, &[&sv], &opts)?;
            sink.note_leakage(&e);
            columns.push(("f_generic".into(), e.mean[0].clone(), e.stderr[0].clone()));
        }
    }
    let mut header = vec!["t".to_string()];
    for (l, _, _) in &columns {
        header.push(format!("{l}_mean"));
        header.push(format!("{l}_stderr"));
    }
    let rows = (0..tcfg.sample_times.len()).map(|k| {
        let mut r = vec![f(tcfg.sample_times[k])];
        for (_, m, s) in &columns {
            r.push(f(m[k]));
            r.push(f(s[k]));
        }
        r
    });
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let name = if other.is_some() { "overlaps.csv" } else { "survival.csv" };
    sink.csv(name, &header, rows)?;
    for (t, rho1) in &spin1 {
        let g = husimi(rho1, dims.spin, q.husimi_res, q.husimi_res)?;
        write_husimi(sink, "spin1", *t, &g)?;
    }
    let mean_of = |label: &str| -> Option<f64> {
        columns.iter().find(|c| c.0 == label).map(|c| c.1.iter().sum::<f64>() / c.1.len() as f64)
    };
    Ok(json!({
        "initial": if other.is_some() { FixedPointLabel::Fsr2Plus.to_string() } else { format!("{:?}", q.initial) },
        "time_average_f1": mean_of("f1"),
        "time_average_f2": mean_of("f2"),
        "time_average_f_generic": mean_of("f_generic"),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::find_recipe;

    fn tiny(exp: Experiment) -> RunConfig {
        let mut c = RunConfig::new(exp, ModelParams::new(1.5, 0.5, 0.1).with_spin(1.0, 6));
        c.grid.n_lambda = 5;
        c.grid.n_v = 4;
        c.classical.t_end = 5.0;
        c.decorrelator.ensemble = 3;
        c.decorrelator.t_end = 10.0;
        c.saturation.members = 4;
        c.saturation.t_end = 10.0;
        c.quantum.t_end = 2.0;
        c.quantum.n_samples = 5;
        c.quantum.n_traj = 4;
        c.quantum.husimi_times = vec![1.0];
        c.quantum.husimi_res = 11;
        c.quantum.compare = Some(InitialState::generic());
        c.quantum.fail_on_leakage = false;
        c
    }

    #[test]
    fn every_experiment_writes_its_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        for exp in Experiment::ALL {
            let mut c = tiny(exp);
            if exp == Experiment::Poincare {
                c.params = ModelParams::new(2.0, 0.2, 0.0);
                c.poincare.t_end = 20.0;
                c.poincare.shell_trajectories = 3;
                c.poincare.find_islands = false;
            }
            if exp == Experiment::ScarFsr2 {
                c.params = ModelParams::new(1.4, 0.2, 0.1).with_spin(1.0, 6);
            }
            if exp == Experiment::ScarNp1 {
                c.quantum.initial = InitialState::FixedPoint { label: "NP1".into() };
            }
            let out = dir.path().join(exp.name());
            let rep = run(&c, &out).unwrap_or_else(|e| panic!("{exp}: {e}"));
            assert!(!rep.outputs.is_empty());
            for o in &rep.outputs {
                assert!(out.join(o).exists(), "{exp}: {o}");
            }
            let m: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
            assert_eq!(m["experiment"], exp.name());
            let again = RunConfig::load(&out.join("manifest.json")).unwrap();
            assert_eq!(again, c);
        }
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        for exp in [Experiment::ClassicalEvolve, Experiment::SyncObservables] {
            let c = tiny(exp);
            let (a, b) = (dir.path().join("a"), dir.path().join("b"));
            let rep = run(&c, &a).unwrap();
            run(&c, &b).unwrap();
            for o in &rep.outputs {
                assert_eq!(std::fs::read(a.join(o)).unwrap(), std::fs::read(b.join(o)).unwrap(), "{o}");
            }
        }
    }

    #[test]
    fn leakage_is_reported_after_writing() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny(Experiment::QuantumEvolve);
        c.params = ModelParams::new(0.5, 1.5, 0.1).with_spin(1.0, 3);
        c.quantum.t_end = 5.0;
        c.quantum.fail_on_leakage = true;
        let err = run(&c, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(dir.path().join("observables.csv").exists());
        assert!(dir.path().join("manifest.json").exists());
    }

    #[test]
    fn out_dir_resolution() {
        let mut c = find_recipe("fig2-regionI").unwrap().config;
        assert_eq!(resolve_out_dir(Some(Path::new("/x")), &c), PathBuf::from("/x"));
        c.out = Some(PathBuf::from("/y"));
        assert_eq!(resolve_out_dir(None, &c), PathBuf::from("/y"));
    }
}
