//! Experiment harness around `smallcell-core`: scenario files, seeded trial
//! runs, CSV output and the slotted collision driver behind the `smallcell`
//! binary.

pub mod config;
pub mod experiment;
pub mod io;
pub mod slots;
pub mod summary;

pub use config::{load_config, parse_config, ConfigError};
pub use experiment::{run_experiment, trial_rng, Algorithm, ExperimentConfig, TrialRecord};
pub use summary::{summarize, SummaryRow};
