//! Scenario files, result formats, parallel sweeps and the command line for
//! the planners in `uav-energy-core`.

pub mod cli;
pub mod config;
pub mod output;
pub mod sweep;

pub use uav_energy_core as core;
