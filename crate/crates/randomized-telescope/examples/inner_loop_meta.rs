//! Meta-optimization: differentiate through an unrolled training run.
//!
//! The meta-parameters are an inner learning-rate schedule (initial rate
//! and decay); the meta-loss is the inner quadratic's loss after `2^i + 1`
//! gradient steps. Backpropagating through more inner steps gives a better
//! meta-gradient at proportionally higher cost — exactly the loop/limit
//! structure the telescope estimator is for. Unrolling reuses compute
//! (running 2N steps includes the first N), which the cost model and the
//! tuner both exploit.
//!
//! Run with `cargo run --example inner_loop_meta`.

use randomized_telescope::problems::QuadraticMetaProblem;
use randomized_telescope::{run, EstimatorChoice, OptimizerConfig, Result};

fn main() -> Result<()> {
    // A badly conditioned inner problem with most of its mass on the slow
    // coordinate: 1025 inner steps are not enough to finish it, so deeper
    // unrolls keep adding real meta-gradient signal. (With a benign inner
    // problem the meta-loss flatlines at zero and there is nothing to tune.)
    let problem = QuadraticMetaProblem::new(
        vec![1.0, 0.002],
        vec![1.0, 30.0],
        5000.0,
        10, // deepest unroll: 2^10 + 1 = 1025 inner steps
    )?;
    let budget = 60_000.0;

    println!("inner problem: 2-d quadratic, curvatures [1.0, 0.002], heavy slow coordinate");
    println!("meta-loss at depth i: inner loss after 2^i + 1 steps, up to 1025\n");

    for (label, estimator) in [
        ("untruncated", EstimatorChoice::Untruncated),
        ("adaptive-ss", EstimatorChoice::SingleSample),
        ("adaptive-rr", EstimatorChoice::RussianRoulette),
    ] {
        let config = OptimizerConfig::new(estimator, 0.05, 0);
        let result = run(&problem, &config, budget, None)?;
        let steps = result.records.last().unwrap().step_index;
        let mut hist = [0usize; 11];
        for record in &result.records[1..] {
            hist[record.truncation_drawn.min(10)] += 1;
        }
        println!("{label}:");
        println!(
            "  meta steps {steps:>5}   final schedule: rate {:.4}, decay {:.4}",
            result.final_theta[0], result.final_theta[1]
        );
        println!("  final meta-loss {:.4e}", result.final_evaluation_loss);
        println!("  draws per depth 1..=10: {:?}\n", &hist[1..]);
    }

    println!(
        "The untruncated baseline pays 1025 inner steps per meta-step and gets\n\
         through ~60 of them. The adaptive telescopes learn from the gradient\n\
         difference norms that most of the signal lives in the shallow unrolls,\n\
         as the draw histograms show: the same budget buys hundreds of cheap\n\
         meta-steps plus occasional full-depth draws that keep the estimate\n\
         unbiased, and both finish well below the baseline."
    );
    Ok(())
}
