//! Seeded trial batches, validation suites, sweeps and calibration, with
//! JSON and CSV output.

pub mod config;
pub mod run;
pub mod sweep;
pub mod validate;

pub use config::{ExperimentConfig, Family};
pub use run::{
    run_experiment, run_experiment_with_jobs, trial_seed, wilson_interval, Summary, Timing, TrialRecord,
    TrialReport,
};
pub use sweep::{calibrate, sweep, CalibrateConfig, CalibrationPoint, CalibrationReport, SweepConfig, SweepReport, SweepRow};
pub use validate::{halfspace_ns_quadrature, run_validation_suite, Check, Suite, ValidationReport};
