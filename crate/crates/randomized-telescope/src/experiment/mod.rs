//! Config-driven experiment harness.
//!
//! An experiment is a (problem × estimator × seed) grid described by a flat
//! key-value config file. Running one produces a CSV trace per run and one
//! summary CSV of per-estimator loss statistics at budget checkpoints —
//! exactly the data a loss-versus-compute figure plots. Everything is
//! seed-determined: rerunning a config reproduces every output byte.

mod config;
mod runner;

pub use config::{
    parse_assignment, parse_estimator, ExperimentConfig, LvParams, MetaParams, ProblemId,
    SyntheticParams,
};
pub use runner::{
    budget_checkpoints, build_problem, default_rate_grid, estimator_label, estimator_slug,
    export_dataset, grid_search_reference_rate, run_experiment, ExperimentOutput, RunSummary,
    SummaryRow,
};
