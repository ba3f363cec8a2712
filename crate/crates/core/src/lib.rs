//! Simulation engine for two large spins coupled to a lossy cavity mode.

// `!(x > 0.0)` is used on purpose to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod error;
pub mod experiments;
pub mod model;
pub mod observables;
pub mod ode;
pub mod operators;
pub mod quantum;
pub mod states;

pub use error::{OctdError, Result};
