//! Config-driven Monte Carlo sweeps and their CSV/JSON outputs.

pub mod config;
pub mod output;
pub mod sweep;

pub use config::{ExperimentConfig, SweepKind};
pub use output::{write_outputs, REPORT_JSON, RESULTS_CSV, SUMMARY_CSV};
pub use sweep::{run_sweep, run_sweep_with_threads, ResultRecord, SweepOutput, THREADS_ENV};
