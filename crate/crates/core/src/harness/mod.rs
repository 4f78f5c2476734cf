//! Experiment orchestration: configuration, single trials, sweeps,
//! calibration and figure output.

pub mod calibrate;
pub mod config;
pub mod plot;
pub mod sweep;
pub mod trial;

pub use calibrate::{calibrate, CalibrationReport};
pub use config::ExperimentConfig;
pub use sweep::{sweep, write_sweep_csv, TrackingArms};
pub use trial::{run_trial, run_trial_with, Cell, RunResult};
