//! Online tuning: let the problem tell you where to truncate.
//!
//! The closed-form `q` needs the sizes of the telescoped differences, which
//! real problems don't announce. The tuner estimates them by evaluating the
//! gradient at every depth on shared noise, tracking squared distances with
//! an exponential moving average, then greedily dropping depths that cost
//! more than the variance they remove. The result: a subsequence, a `q`
//! over it, and a learning rate rescaled for the estimator's actual noise.
//!
//! Run with `cargo run --example adaptive_tuning`.

use randomized_telescope::problems::{DecayKind, SyntheticDecayProblem};
use randomized_telescope::{
    tune, CostModel, GradientSequence, Result, SquaredDistanceTable, WeightKind,
};

fn show(label: &str, tuned: &randomized_telescope::TunedEstimator) {
    println!("{label}");
    println!("  kept depths    {:?}", tuned.subsequence.indices());
    let probs: Vec<String> = tuned.q.probs().iter().map(|p| format!("{p:.3}")).collect();
    println!("  q over them    [{}]", probs.join(", "));
    println!("  E[compute]     {:.3} cost units", tuned.stats.expected_compute);
    println!("  E||G^||^2      {:.4}", tuned.stats.expected_squared_norm);
    println!("  efficiency     {:.4} (1 / compute·variance)", tuned.stats.roe);
    println!("  learning rate  {:.5}", tuned.learning_rate);
}

fn main() -> Result<()> {
    // Geometric decay with doubling costs: deep gradients are accurate but
    // each extra depth doubles the price, so the tuner has a real tradeoff.
    let problem = SyntheticDecayProblem::new(
        DecayKind::Geometric { rate: 0.6, scale: 2.0 },
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![0.0, 0.0],
        8,
        3,
        CostModel::doubling(8, true),
    )?;

    let mut table = SquaredDistanceTable::new(problem.horizon(), 0.9)?;
    let theta = problem.initial_point(0);

    let tuned = tune(&problem, &theta, &mut table, WeightKind::SingleSample, 0.1, 100)?;
    show("single-sample, first tune:", &tuned);

    // Evaluating all depths once more sharpens the averages but barely moves
    // the answer — the synthetic problem's difference sizes are stationary.
    let tuned = tune(&problem, &theta, &mut table, WeightKind::SingleSample, 0.1, 101)?;
    show("\nsingle-sample, after another pass:", &tuned);

    let mut table = SquaredDistanceTable::new(problem.horizon(), 0.9)?;
    let tuned = tune(&problem, &theta, &mut table, WeightKind::RussianRoulette, 0.1, 100)?;
    show("\nrussian-roulette on the same problem:", &tuned);

    println!(
        "\nBoth estimators keep only a few depths; the roulette variant \
         telescopes through every kept depth up to its draw, the \
         single-sample variant pays for exactly one."
    );
    Ok(())
}
