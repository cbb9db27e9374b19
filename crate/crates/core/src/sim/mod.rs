//! Experiment driver: configuration, the step loop, output files and sweeps.

pub mod config;
pub mod engine;
pub mod output;
pub mod sweep;

pub use config::{Preset, RunConfig};
pub use engine::{run, Simulation, StateDump};
pub use sweep::{aggregate, sweep, RunSummary, SweepRow};
