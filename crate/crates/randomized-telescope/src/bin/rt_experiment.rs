//! Command-line shell over the experiment harness: run a config's grid,
//! grid-search a reference learning rate, or export a ground-truth dataset.

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use randomized_telescope::experiment::{
    build_problem, default_rate_grid, export_dataset, grid_search_reference_rate, run_experiment,
    ExperimentConfig, ProblemId,
};

#[derive(Parser)]
#[command(
    name = "rt-experiment",
    about = "Budgeted optimization experiments with randomly-truncated gradient estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the (estimator × seed) grid described by a config file and write
    /// CSV traces plus a summary table.
    Run {
        /// Path to a flat `key = value` config file.
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. `--set budget_limit=50000`.
        /// Repeatable; later overrides win.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Pick the best reference learning rate for a problem by short
    /// untruncated runs over the standard grid.
    GridSearch {
        /// Problem id: synthetic, lotka_volterra, or quadratic_meta.
        #[arg(long)]
        problem: String,
        /// Budget per candidate, in the problem's cost units
        /// (default: 50 full-depth evaluations).
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the ground-truth record behind a problem's observations.
    ExportDataset {
        /// Problem id; only lotka_volterra has a dataset.
        #[arg(long)]
        problem: String,
        #[arg(long)]
        seed: u64,
    },
}

// Builds a problem from its config defaults, for the subcommands that take
// a bare problem id.
fn default_problem(id: &str) -> anyhow::Result<ExperimentConfig> {
    let text = format!(
        "problem = {id}\nestimators = untruncated\nbudget_limit = 1\nreference_rate = 1\n"
    );
    Ok(ExperimentConfig::from_sources(&text, &[])?)
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { config, set } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading config {}", config.display()))?;
            let config = ExperimentConfig::from_sources(&text, &set)?;
            let output = run_experiment(&config)?;
            for path in &output.trace_paths {
                println!("wrote {}", path.display());
            }
            println!("wrote {}", output.summary_path.display());
        }
        Command::GridSearch {
            problem,
            budget,
            seed,
        } => {
            let config = default_problem(&problem)?;
            let problem = build_problem(&config)?;
            let budget = budget
                .unwrap_or_else(|| 50.0 * problem.cost_model().cost(problem.horizon()));
            let rate =
                grid_search_reference_rate(problem.as_ref(), &default_rate_grid(), budget, seed)?;
            println!("{rate:.16e}");
        }
        Command::ExportDataset { problem, seed } => {
            let id: ProblemId = problem.parse()?;
            print!("{}", export_dataset(id, seed)?);
        }
    }
    Ok(())
}
