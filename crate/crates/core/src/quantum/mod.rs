//! Quantum dynamics under the Lindblad master equation: quantum-jump
//! trajectories, closed-system evolution and a direct density-matrix
//! integrator used as a reference.

mod ensemble;
mod lindblad;
mod measure;
pub mod propagator;
pub mod stats;
mod trajectory;
mod unitary;

pub use ensemble::{run_ensemble, EnsembleOptions, EnsembleResult, RhoAssembly};
pub use lindblad::{lindblad_exact, liouvillian, pure_density, ExactOptions, ExactSeries, DEFAULT_EXACT_DIM_CAP};
pub use measure::{Expectation, Measurement, Overlap};
pub use propagator::TaylorPropagator;
pub use stats::{ks_exponential, KsResult};
pub use trajectory::{evolve_trajectory, fock_leakage, TrajectoryConfig, TrajectoryRecord};
pub use unitary::unitary_evolve;
