//! Config-driven orchestration of the whole study and its reports.

pub mod config;
pub mod plot;
pub mod run;

pub use config::RunConfig;
pub use plot::{plot, PlotReport};
pub use run::{run, RunManifest, RunOutcome};
