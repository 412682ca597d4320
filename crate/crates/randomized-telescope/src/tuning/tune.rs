use crate::error::{Error, Result};
use crate::problems::GradientSequence;
use crate::telescope::{make_weight_scheme, TruncationDistribution, WeightKind, WeightScheme};
use crate::tuning::{
    compute_and_variance, greedy_subsequence_select, optimal_q_russian_roulette,
    optimal_q_single_sample, EstimatorStats, SquaredDistanceTable, SubsequenceSelection,
};

/// Everything the optimizer needs to draw gradient estimates until the next
/// tuning pass: where to truncate, how to sample, how to reweight, and how
/// far to step.
#[derive(Debug, Clone)]
pub struct TunedEstimator {
    pub subsequence: SubsequenceSelection,
    /// Sampling distribution over positions of `subsequence`.
    pub q: TruncationDistribution,
    pub weights: WeightScheme,
    pub stats: EstimatorStats,
    pub learning_rate: f64,
}

/// Rescales a reference learning rate to an estimator with different
/// variance: `η = η̄ · reference_norm / estimator_norm`.
///
/// The reference rate is whatever step size works for the plain full-depth
/// estimator, whose expected squared norm is the reference norm. A noisier
/// estimator takes proportionally smaller steps, a leaner one larger steps,
/// keeping the expected per-step progress matched. Both norms appear only as
/// a ratio, so common rescaling cancels.
pub fn scale_learning_rate(
    reference_rate: f64,
    reference_squared_norm: f64,
    estimator_squared_norm: f64,
) -> Result<f64> {
    for (name, v) in [
        ("reference rate", reference_rate),
        ("reference squared norm", reference_squared_norm),
        ("estimator squared norm", estimator_squared_norm),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositive(name, v));
        }
    }
    Ok(reference_rate * reference_squared_norm / estimator_squared_norm)
}

/// One full tuning pass: refresh the distance table at the current point,
/// re-select the subsequence, and rebuild the sampling distribution, weights,
/// and learning rate around it.
///
/// Every depth is evaluated once on a shared noise draw (`noise_seed`), which
/// is what makes the pairwise distances measure truncation error rather than
/// minibatch noise. The caller pays for those evaluations; see the optimizer
/// for the accounting.
pub fn tune(
    problem: &dyn GradientSequence,
    theta: &[f64],
    table: &mut SquaredDistanceTable,
    kind: WeightKind,
    reference_rate: f64,
    noise_seed: u64,
) -> Result<TunedEstimator> {
    let horizon = problem.horizon();
    if table.horizon() != horizon {
        return Err(Error::ShapeMismatch(format!(
            "distance table horizon {} does not match problem horizon {horizon}",
            table.horizon()
        )));
    }
    let costs = problem.cost_model();

    let gradients: Vec<Vec<f64>> = (1..=horizon)
        .map(|depth| problem.gradient(theta, depth, noise_seed))
        .collect::<Result<_>>()?;
    table.update(&gradients)?;

    let subsequence = greedy_subsequence_select(table, costs, kind)?;
    let norms = table.delta_norms(&subsequence);
    let sel_costs: Vec<f64> = subsequence.indices().iter().map(|&i| costs.cost(i)).collect();
    let q = match kind {
        WeightKind::SingleSample => optimal_q_single_sample(&norms, &sel_costs)?,
        WeightKind::RussianRoulette => optimal_q_russian_roulette(&norms, &sel_costs)?,
        WeightKind::Explicit => {
            return Err(Error::InvalidWeights(
                "tuning only supports the single-sample and roulette schemes".into(),
            ))
        }
    };
    let weights = make_weight_scheme(kind, &q)?;
    let stats = compute_and_variance(table, costs, &subsequence, kind, &q)?;
    let learning_rate =
        scale_learning_rate(reference_rate, table.value(0, horizon), stats.expected_squared_norm)?;

    Ok(TunedEstimator {
        subsequence,
        q,
        weights,
        stats,
        learning_rate,
    })
}
