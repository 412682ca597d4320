//! The experiment harness end to end, without touching the CLI.
//!
//! Parses a config (the same flat key-value format the `rt-experiment`
//! binary reads), grid-searches a reference learning rate, runs the
//! (estimator × seed) grid, and prints where the CSVs landed plus the
//! summary table — then runs the whole thing again and checks the files
//! came out byte-identical.
//!
//! Run with `cargo run --example experiment_pipeline`.

use randomized_telescope::experiment::{
    build_problem, default_rate_grid, estimator_label, grid_search_reference_rate,
    run_experiment, ExperimentConfig,
};
use randomized_telescope::Result;

const CONFIG: &str = "\
problem = synthetic
estimators = untruncated, fixed(3), adaptive-ss, adaptive-rr
seeds = 0, 1, 2
budget_limit = 2000
reference_rate = 0.0  # placeholder, set below from the grid search
synthetic_kind = geometric
synthetic_rate = 0.7
synthetic_horizon = 12
output_dir = runs/example_pipeline
";

fn main() -> Result<()> {
    // Step 1: pick the reference rate the way the experiments do — short
    // untruncated runs over the standard grid. (On this synthetic quadratic
    // the winner is the Newton step, rate 1.0; real problems pick smaller.)
    let config = ExperimentConfig::from_sources(CONFIG, &["reference_rate=0.1".into()])?;
    let problem = build_problem(&config)?;
    let rate = grid_search_reference_rate(problem.as_ref(), &default_rate_grid(), 500.0, 0)?;
    println!("grid search picked reference rate {rate}\n");

    // Step 2: run the grid with that rate (a command-line `--set` would do
    // the same).
    let config =
        ExperimentConfig::from_sources(CONFIG, &[format!("reference_rate={rate}")])?;
    let output = run_experiment(&config)?;

    println!("wrote {} trace files under {}:", output.trace_paths.len(),
        config.output_dir.display());
    for path in output.trace_paths.iter().take(3) {
        println!("  {}", path.file_name().unwrap().to_string_lossy());
    }
    println!("  ...\n");

    println!(
        "{:<14} {:>14} {:>12} {:>12}",
        "estimator", "checkpoint", "mean loss", "std"
    );
    for row in &output.summary.rows {
        // One line per estimator at the final checkpoint; the CSV has all 7.
        if row.budget_checkpoint == config.budget_limit {
            println!(
                "{:<14} {:>14.0} {:>12.6} {:>12.6}",
                estimator_label(row.estimator),
                row.budget_checkpoint,
                row.mean_loss,
                row.std_loss
            );
        }
    }

    // Step 3: the determinism contract — rerunning the experiment rewrites
    // every file with exactly the same bytes.
    let before = std::fs::read(&output.summary_path)?;
    let rerun = run_experiment(&config)?;
    let after = std::fs::read(&rerun.summary_path)?;
    println!("\nrerun byte-identical: {}", before == after);
    Ok(())
}
