use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use octd_core::experiments::{find_recipe, list_recipes, resolve_out_dir, run, Experiment, RunConfig};
use octd_core::{OctdError, Result};

/// Run an open coupled-top Dicke model experiment and write CSV/JSON artifacts.
#[derive(Parser, Debug)]
#[command(name = "octd", version)]
struct Cli {
    /// Experiment name (fixed-points, phase-diagram, classical-evolve, decorrelator,
    /// poincare, saturation, quantum-evolve, scar-np1, scar-fsr2, sync-observables),
    /// or `list-recipes`.
    experiment: String,

    /// TOML configuration, or a manifest.json from an earlier run.
    #[arg(long, conflicts_with = "recipe")]
    config: Option<PathBuf>,

    /// Named figure recipe to use instead of a config file.
    #[arg(long)]
    recipe: Option<String>,

    /// Output directory; defaults to $OCTD_OUT/<recipe or experiment>.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for trajectory ensembles and grids.
    #[arg(long)]
    threads: Option<usize>,

    /// Husimi grid resolution along both axes.
    #[arg(long)]
    husimi_res: Option<usize>,
}

fn print_recipes() {
    for r in list_recipes() {
        let p = &r.config.params;
        println!(
            "{:<26} {:<17} V={:<4} lambda={:<4} kappa={:<4} S={:<3} n_max={:<3} {}",
            r.name, r.config.experiment.name(), p.v, p.lambda, p.kappa, p.spin, p.n_max, r.description
        );
    }
}

fn execute(cli: Cli) -> Result<()> {
    if cli.experiment == "list-recipes" {
        print_recipes();
        return Ok(());
    }
    let experiment: Experiment = cli.experiment.parse()?;
    let mut cfg = match (&cli.config, &cli.recipe) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => {
            find_recipe(name).ok_or_else(|| OctdError::Config(format!("unknown recipe '{name}'")))?.config
        }
        (None, None) => return Err(OctdError::Config("either --config or --recipe is required".into())),
    };
    if cfg.experiment != experiment {
        return Err(OctdError::Config(format!(
            "configuration is for '{}', not '{}'",
            cfg.experiment, experiment
        )));
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.husimi_res {
        cfg.quantum.husimi_res = r;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| OctdError::Config(e.to_string()))?;
    }
    let out = resolve_out_dir(cli.out.as_deref(), &cfg);
    let outcome = run(&cfg, &out);
    if let Err(OctdError::Leakage { .. }) = &outcome {
        eprintln!("warning: artifacts were written to {} despite Fock leakage", out.display());
    }
    let report = outcome?;
    println!("{}", out.display());
    for o in &report.outputs {
        println!("  {o}");
    }
    if let Some(l) = report.max_leakage {
        if report.flagged_trajectories > 0 {
            eprintln!("warning: max Fock leakage {l:.3e} in {} trajectories", report.flagged_trajectories);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("octd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
