//! Run driver around `slabflow-core`: config files, initial-data presets,
//! binary checkpoints, the marching loop with its invariant guards, and the
//! symmetric/asymmetric comparison sweep.

pub mod checkpoint;
pub mod config;
pub mod presets;
pub mod run;
pub mod sweep;

pub use config::{RunConfig, Tolerances};
pub use presets::build_initial_state;
pub use run::{run_to_end, RunSummary};
pub use sweep::{compare_symmetric_asymmetric, SweepRow};
