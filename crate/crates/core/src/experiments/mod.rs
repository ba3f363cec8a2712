//! Run orchestration: configuration files, named recipes and artifact output.

mod config;
mod recipes;
mod run;

pub use config::{
    parse_label, ClassicalSection, DecorrelatorSection, Experiment, GridSection, InitialState, PoincareSection,
    QuantumSection, RunConfig, SaturationSection,
};
pub use recipes::{find_recipe, list_recipes, Recipe};
pub use run::{resolve_out_dir, run, RunReport};
