use crate::error::{Error, Result};
use crate::telescope::TruncationDistribution;

/// Relative floor applied to positions whose difference norm is estimated as
/// exactly zero, so every depth keeps a sliver of sampling probability and
/// the unbiasedness support condition survives an optimistic estimate.
pub const ZERO_NORM_FLOOR: f64 = 1e-6;

fn validate_inputs(delta_norms: &[f64], costs: &[f64]) -> Result<()> {
    if delta_norms.is_empty() || delta_norms.len() != costs.len() {
        return Err(Error::ShapeMismatch(format!(
            "need one cost per difference norm, got {} norms and {} costs",
            delta_norms.len(),
            costs.len()
        )));
    }
    for &n in delta_norms {
        if !(n >= 0.0 && n.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "difference norms must be finite and nonnegative, got {n}"
            )));
        }
    }
    for &c in costs {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidCost(format!(
                "costs must be finite and positive, got {c}"
            )));
        }
    }
    if delta_norms.iter().all(|&n| n == 0.0) {
        return Err(Error::AllZeroNorms);
    }
    Ok(())
}

// Replaces zero entries with a small fraction of the largest entry. Relative
// rather than absolute so the result is invariant to rescaling the norms.
fn floor_zeros(weights: &mut [f64]) {
    let max = weights.iter().cloned().fold(0.0, f64::max);
    let floor = ZERO_NORM_FLOOR * max;
    for w in weights {
        if *w == 0.0 {
            *w = floor;
        }
    }
}

/// Sampling distribution minimizing `E[compute] · E‖Ĝ‖²` for the
/// single-sample estimator when difference terms are worst-case correlated:
/// `q(n) ∝ √(E‖Δₙ‖² / C(n))`.
///
/// `costs[n]` is the total cost of an estimate that draws position `n`.
pub fn optimal_q_single_sample(
    delta_norms: &[f64],
    costs: &[f64],
) -> Result<TruncationDistribution> {
    validate_inputs(delta_norms, costs)?;
    let mut w: Vec<f64> = delta_norms
        .iter()
        .zip(costs)
        .map(|(&n, &c)| (n / c).sqrt())
        .collect();
    floor_zeros(&mut w);
    TruncationDistribution::from_weights(&w)
}

/// Sampling distribution minimizing `E[compute] · E‖Ĝ‖²` for the
/// Russian-roulette estimator when difference terms are uncorrelated.
///
/// The optimum is expressed through tail probabilities: `Q(n) ∝
/// √(E‖Δₙ‖² / (C(n) − C(n−1)))` with `C(0) = 0`, which is why the costs must
/// be strictly increasing. Raw tails need not be monotone, so they are
/// clamped by a right-to-left running maximum before differencing back into
/// point masses; positions on a clamped plateau get probability zero, which
/// the roulette weights tolerate (only tails enter the weight denominators).
pub fn optimal_q_russian_roulette(
    delta_norms: &[f64],
    costs: &[f64],
) -> Result<TruncationDistribution> {
    validate_inputs(delta_norms, costs)?;
    if !costs.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidCost(
            "roulette tails need strictly increasing costs".into(),
        ));
    }
    let mut tails: Vec<f64> = delta_norms
        .iter()
        .zip(costs)
        .enumerate()
        .map(|(i, (&n, &c))| {
            let marginal = if i == 0 { c } else { c - costs[i - 1] };
            (n / marginal).sqrt()
        })
        .collect();
    floor_zeros(&mut tails);
    for i in (0..tails.len() - 1).rev() {
        tails[i] = tails[i].max(tails[i + 1]);
    }
    let scale = tails[0];
    let q: Vec<f64> = (0..tails.len())
        .map(|i| {
            let next = if i + 1 < tails.len() { tails[i + 1] } else { 0.0 };
            (tails[i] - next) / scale
        })
        .collect();
    TruncationDistribution::from_weights(&q)
}
