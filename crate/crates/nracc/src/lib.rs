//! Scenario files, report writers and the scenario library for the `nracc`
//! command-line simulator. The simulation itself lives in `nracc-core`.

pub mod config;
pub mod library;
pub mod report;

pub use nracc_core as core;
