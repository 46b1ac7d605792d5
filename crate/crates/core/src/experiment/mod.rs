//! Experiment runs: configuration, data splits, training/evaluation commands
//! and their report files.

mod commands;
mod config;
mod split;

pub use commands::{
    analysis_text, cmd_ablate, cmd_analyze, cmd_compare_losses, cmd_gen, cmd_sweep, cmd_train,
    comparison_table, load_dataset, metrics_text, prepare, run_prepared, sweep_table, write_run,
    ComparisonRow, Prepared, RunOutcome, Spread, SweepConfig, SweepParam, SweepPoint, SWEEP_METRICS,
};
pub use config::{DatasetSource, RunConfig, SplitConfig};
pub use split::{split_indices, Split};
