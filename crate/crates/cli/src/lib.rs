//! Scenario files, presets, runs and sweeps behind the `ghostsim` binary.

pub mod config;
pub mod error;
pub mod presets;
pub mod run;
pub mod sweep;

pub use config::ScenarioConfig;
pub use error::{CliError, Result};
pub use presets::{preset, PRESETS};
pub use run::{evaluate, run_scenario, write_artifacts, RunOutcome};
pub use sweep::{sweep, Axis, SweepRow};
