//! Experiment presets, configuration ingestion, trajectory persistence,
//! plot emission and the command-line driver for the quadpend engine.

pub mod config;
pub mod csv;
pub mod plots;
pub mod presets;
pub mod run;
pub mod summary;
