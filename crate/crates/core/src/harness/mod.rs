//! Experiment runner: configs, trace files, the verification suite and
//! parameter sweeps.

pub mod config;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::{Algorithm, ExperimentConfig, StartRule};
pub use run::{attach_bounds, execute, exit_code, run_experiment};
pub use sweep::{expand_grid, fit_line, sweep, Fit, SweepRun, SweepSummary};
pub use verify::{catalogue_instance, check_names, verify, CheckResult, VerificationReport};
