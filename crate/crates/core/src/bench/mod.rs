//! Monte Carlo benchmark harness.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod output;

pub use config::{ExperimentConfig, FilterSettings, GraphConfig, PAPER_SCALE_TRIALS};
pub use experiment::{run_experiment, trial_seed, FilterResult, RunResult};
pub use metrics::{armse, rmse_series};
pub use output::{emit_csv, format_sig};
