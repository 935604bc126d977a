//! Experiment harness: configuration, the trial loop, CSV records, summaries and bound tables.

pub mod bounds;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod report;

pub use bounds::{bounds_report, bounds_to_csv, BoundsRow, BoundsSpec, Factor};
pub use config::{DatasetFormat, DatasetSource, ExperimentConfig, Method, PriorMode};
pub use error::CliError;
pub use experiment::{run_experiment, sample_trial, Status, TrialData, TrialRecord};
pub use report::{format_summary, records_to_csv, summarize, SummaryRow, CSV_HEADER};
