//! The core estimator in one file.
//!
//! A quantity defined as a limit — here just the sum of a short vector
//! sequence — can be estimated without evaluating every term: draw a random
//! truncation depth `N ~ q`, sum the terms up to `N`, and reweight so the
//! estimate is unbiased. The two weight schemes trade variance for compute
//! differently: single-sample keeps one importance-weighted term, Russian
//! roulette keeps the whole prefix with inverse-tail weights.
//!
//! Run with `cargo run --example estimator_basics`.

use randomized_telescope::rng;
use randomized_telescope::{
    enumerate_exact_moments, make_weight_scheme, rt_estimate, validate_unbiasedness_constraint,
    CostModel, DifferenceSequence, Result, TruncationDistribution, WeightKind,
};

fn main() -> Result<()> {
    // A geometrically shrinking sequence of 2-vectors; its telescoping sum
    // is the target. Think "gradient at increasingly fine approximations":
    // early terms are big corrections, later ones small refinements.
    let deltas = DifferenceSequence::new(
        (1..=8)
            .map(|n| {
                let s = 0.5f64.powi(n);
                vec![3.0 * s, -s]
            })
            .collect(),
    )?;
    let target = deltas.total();
    println!("target (full sum):   [{:.6}, {:.6}]", target[0], target[1]);

    // Sampling deeper truncations with geometrically decaying probability
    // matches the decay of the terms — the recipe the theory recommends.
    let q = TruncationDistribution::geometric(0.5, deltas.horizon())?;
    let costs = CostModel::linear(deltas.horizon(), true);

    for kind in [WeightKind::SingleSample, WeightKind::RussianRoulette] {
        let scheme = make_weight_scheme(kind, &q)?;

        // The algebraic identity behind unbiasedness, checked numerically:
        // every term's weight averages to exactly 1 under q.
        let check = validate_unbiasedness_constraint(&scheme, &q)?;
        assert!(check.satisfied);

        // Exact moments by enumerating every possible draw...
        let exact = enumerate_exact_moments(&deltas, &scheme, &q, &costs)?;

        // ...and a Monte-Carlo confirmation with real draws.
        let mut rng = rng::stream(7, 0, 0);
        let samples = 20_000;
        let mut mean = vec![0.0; 2];
        let mut compute = 0.0;
        for _ in 0..samples {
            let s = rt_estimate(&deltas, &scheme, &q, &costs, &mut rng)?;
            for (m, x) in mean.iter_mut().zip(&s.estimate) {
                *m += x / samples as f64;
            }
            compute += s.compute_charged / samples as f64;
        }

        println!("\n{kind:?}:");
        println!(
            "  exact mean         [{:.6}, {:.6}]  (bias {:.1e})",
            exact.mean[0],
            exact.mean[1],
            (exact.mean[0] - target[0]).hypot(exact.mean[1] - target[1]),
        );
        println!("  sampled mean       [{:.6}, {:.6}]  ({samples} draws)", mean[0], mean[1]);
        println!("  expected compute   {:.4} (sampled {compute:.4})", exact.expected_compute);
        println!("  E ||estimate||^2   {:.4}", exact.expected_squared_norm);
    }

    println!(
        "\nBoth schemes hit the target in expectation; they differ in how \
         much compute and variance a draw costs."
    );
    Ok(())
}
