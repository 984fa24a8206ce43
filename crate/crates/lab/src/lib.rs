//! Experiment tooling around `tsc-core`: CityFlow-style JSON instances,
//! episode logs, multi-run evolution campaigns and their reports.

pub mod analysis;
pub mod config;
pub mod experiment;
pub mod formats;

pub use analysis::{analyze_terminals, AnalysisError, TerminalReport};
pub use config::{ControllerSpec, DemandSettings, ExperimentConfig, GridSpec, InstanceSpec};
pub use experiment::{compute_gap, emit_plot_data, run_campaign, run_experiment, Instance, RunReport, GP_METHOD};
