//! Experiment orchestration: seeded repeats, exact regret accounting,
//! episode logs, cross-repeat summaries and offline kernel fitting.

mod config;
mod fit;
mod ledger;
mod log;
mod output;
mod run;
mod summary;

pub use config::{EnvironmentConfig, ExperimentConfig, PlayerConfig};
pub use fit::{fit_hyperparameters, fit_routing_kernels, sample_outcomes, select_kernel, FitResult};
pub use ledger::{regret_series, time_average, RegretLedger};
pub use log::{EpisodeLog, RoundRecord, StrategySnapshot};
pub use output::{export, find_logs, log_file_name, write_outputs, write_series, SUMMARY_FILE};
pub use run::{base_seed, build_environment, build_learner, run_experiment, run_experiment_with, RunOptions};
pub use summary::{episode_series, summarize, FinalStats, SeriesStats, Summary};
