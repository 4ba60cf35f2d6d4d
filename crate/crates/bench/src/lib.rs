//! Benchmark generators, reference simulators and the command-line driver.

pub mod cli;
pub mod config;
pub mod pointcar;
pub mod quad;
pub mod report;
pub mod thermostat;

/// Distance between the numeric codes of consecutive controller modes.
/// Mode tests compare against midpoints between codes; a wide spacing keeps
/// those tests sharp even under heavy smoothing.
pub const MODE_SPACING: f64 = 100.0;
