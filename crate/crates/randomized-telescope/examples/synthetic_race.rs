//! Four estimators, one compute budget: who gets furthest?
//!
//! On the synthetic decay problem the full-depth gradient is exact but
//! costs the whole horizon per step; a fixed shallow truncation is cheap
//! but biased — it descends quickly, then stalls at the wrong optimum. The
//! adaptive telescopes pay a variance premium for unbiasedness, spend most
//! draws on shallow depths, and take several times more steps for the same
//! spend.
//!
//! Run with `cargo run --example synthetic_race`.

use randomized_telescope::problems::{DecayKind, SyntheticDecayProblem};
use randomized_telescope::{run, CostModel, EstimatorChoice, OptimizerConfig, Result};

fn main() -> Result<()> {
    // Fast-decaying tails are the regime where truncation pays: the depth-n
    // difference norm is 0.35ⁿ, so shallow gradients are already close.
    let problem = SyntheticDecayProblem::new(
        DecayKind::Geometric { rate: 0.35, scale: 1.0 },
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![0.0, 0.0],
        16,
        1,
        CostModel::linear(16, true),
    )?;

    for budget in [500.0, 6000.0] {
        println!("budget {budget} cost units, horizon 16, geometric tails (rate 0.35)");
        println!("{:<14} {:>12} {:>8}", "estimator", "final loss", "steps");
        for (label, estimator) in [
            ("untruncated", EstimatorChoice::Untruncated),
            ("fixed(4)", EstimatorChoice::FixedTruncation(4)),
            ("adaptive-ss", EstimatorChoice::SingleSample),
            ("adaptive-rr", EstimatorChoice::RussianRoulette),
        ] {
            let config = OptimizerConfig::new(estimator, 0.1, 0);
            let result = run(&problem, &config, budget, None)?;
            println!(
                "{:<14} {:>12.3e} {:>8}",
                label,
                result.final_evaluation_loss,
                result.records.last().unwrap().step_index,
            );
        }
        println!();
    }

    println!(
        "Early on, cheap wins: fixed(4) leads because a biased gradient is\n\
         still mostly right far from the optimum. With more budget the floors\n\
         sort the field. Fixed(4) is parked on its bias floor forever — extra\n\
         compute never fixes a biased gradient. The adaptive telescopes keep\n\
         descending to a noise floor orders of magnitude lower (their draws\n\
         are random, so they trade a little stationary variance for shallow,\n\
         cheap steps). The untruncated gradient is deterministic on this\n\
         problem, so it alone reaches machine precision — on the real\n\
         problems every estimator is stochastic and that advantage is gone."
    );
    Ok(())
}
