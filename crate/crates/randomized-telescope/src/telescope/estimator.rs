use rand::Rng;

use super::{TruncationDistribution, WeightScheme};
use crate::{Error, Result};

/// Largest horizon [`enumerate_exact_moments`] will sum over. The sweep is
/// O(H²·dim), so this caps it at roughly a second, not at exactness.
pub const ENUMERATION_LIMIT: usize = 4096;

/// The telescoped terms `Δ_1..Δ_H`, each a vector of the same dimension.
/// Partial sums reconstruct the approximation sequence: `Y_N = Σ_{n≤N} Δ_n`,
/// with the convention `Y_0 = 0` so `Δ_1 = Y_1`.
#[derive(Debug, Clone)]
pub struct DifferenceSequence {
    terms: Vec<Vec<f64>>,
    dim: usize,
}

impl DifferenceSequence {
    pub fn new(terms: Vec<Vec<f64>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::ShapeMismatch("no difference terms".into()));
        }
        let dim = terms[0].len();
        if dim == 0 {
            return Err(Error::ShapeMismatch("zero-dimensional terms".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.len() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "term {} has dimension {}, want {dim}",
                    i + 1,
                    t.len()
                )));
            }
            if t.iter().any(|x| !x.is_finite()) {
                return Err(Error::ShapeMismatch(format!(
                    "term {} has a non-finite entry",
                    i + 1
                )));
            }
        }
        Ok(Self { terms, dim })
    }

    /// Differences of an explicit approximation sequence `Y_1..Y_H`.
    pub fn from_partial_sums(ys: &[Vec<f64>]) -> Result<Self> {
        let mut terms = Vec::with_capacity(ys.len());
        let mut prev: Option<&Vec<f64>> = None;
        for y in ys {
            let delta = match prev {
                None => y.clone(),
                Some(p) => y.iter().zip(p).map(|(a, b)| a - b).collect(),
            };
            terms.push(delta);
            prev = Some(y);
        }
        Self::new(terms)
    }

    pub fn horizon(&self) -> usize {
        self.terms.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Δ_n`, 1-based.
    pub fn term(&self, n: usize) -> &[f64] {
        &self.terms[n - 1]
    }

    /// The full telescoping sum `Y_H`, the quantity being estimated.
    pub fn total(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for t in &self.terms {
            for (a, x) in acc.iter_mut().zip(t) {
                *a += x;
            }
        }
        acc
    }
}

/// Evaluation cost per depth, `C(n)`, plus whether evaluating depth n can
/// reuse the work done for depth n−1 (an iterative solver can; a solver
/// restarted with a finer grid cannot).
#[derive(Debug, Clone)]
pub struct CostModel {
    costs: Vec<f64>,
    reuse: bool,
}

impl CostModel {
    pub fn new(costs: Vec<f64>, reuse: bool) -> Result<Self> {
        if costs.is_empty() {
            return Err(Error::InvalidCost("no cost entries".into()));
        }
        let mut prev = 0.0;
        for (i, &c) in costs.iter().enumerate() {
            if !c.is_finite() || c <= 0.0 {
                return Err(Error::InvalidCost(format!(
                    "C({}) = {c}, want a positive finite value",
                    i + 1
                )));
            }
            if c < prev {
                return Err(Error::InvalidCost(format!(
                    "C({}) = {c} decreases below C({}) = {prev}",
                    i + 1,
                    i
                )));
            }
            prev = c;
        }
        Ok(Self { costs, reuse })
    }

    /// `C(n) = n`: each extra depth costs one more unit.
    pub fn linear(horizon: usize, reuse: bool) -> Self {
        Self::new((1..=horizon).map(|n| n as f64).collect(), reuse).unwrap()
    }

    /// `C(n) = 2^n`: the doubling schedule that stands in for an infinite
    /// horizon — half of all compute is spent on the deepest level either way.
    pub fn doubling(horizon: usize, reuse: bool) -> Self {
        Self::new((1..=horizon).map(|n| (n as f64).exp2()).collect(), reuse).unwrap()
    }

    pub fn horizon(&self) -> usize {
        self.costs.len()
    }

    pub fn reuse(&self) -> bool {
        self.reuse
    }

    /// `C(n)`, 1-based.
    pub fn cost(&self, n: usize) -> f64 {
        self.costs[n - 1]
    }

    /// Compute charged for evaluating the estimate at drawn depth N: `C(N)`
    /// under reuse, otherwise the cost of every depth whose weight is nonzero.
    pub fn charge(&self, scheme: &WeightScheme, drawn: usize) -> f64 {
        if self.reuse {
            return self.cost(drawn);
        }
        (1..=drawn)
            .filter(|&n| scheme.weight(n, drawn) != 0.0)
            .map(|n| self.cost(n))
            .sum()
    }
}

/// One draw of the estimator.
#[derive(Debug, Clone)]
pub struct RtSample {
    pub truncation_index: usize,
    pub estimate: Vec<f64>,
    pub compute_charged: f64,
}

fn check_horizons(
    deltas: &DifferenceSequence,
    scheme: &WeightScheme,
    q: &TruncationDistribution,
    cost: &CostModel,
) -> Result<usize> {
    let h = deltas.horizon();
    if scheme.horizon() != h || q.horizon() != h || cost.horizon() != h {
        return Err(Error::ShapeMismatch(format!(
            "horizons differ: deltas {h}, weights {}, q {}, costs {}",
            scheme.horizon(),
            q.horizon(),
            cost.horizon()
        )));
    }
    Ok(h)
}

/// Draw `N ~ q` and return the reweighted partial sum `Σ_{n≤N} Δ_n W(n,N)`
/// along with the compute charged for it.
pub fn rt_estimate<R: Rng + ?Sized>(
    deltas: &DifferenceSequence,
    scheme: &WeightScheme,
    q: &TruncationDistribution,
    cost: &CostModel,
    rng: &mut R,
) -> Result<RtSample> {
    check_horizons(deltas, scheme, q, cost)?;
    let drawn = q.sample(rng);
    let mut estimate = vec![0.0; deltas.dim()];
    for n in 1..=drawn {
        let w = scheme.weight(n, drawn);
        if w == 0.0 {
            continue;
        }
        for (e, d) in estimate.iter_mut().zip(deltas.term(n)) {
            *e += w * d;
        }
    }
    Ok(RtSample {
        truncation_index: drawn,
        estimate,
        compute_charged: cost.charge(scheme, drawn),
    })
}

/// Exact estimator moments.
#[derive(Debug, Clone)]
pub struct ExactMoments {
    pub mean: Vec<f64>,
    pub expected_squared_norm: f64,
    pub expected_compute: f64,
}

/// Enumerate every truncation depth and weight it by `q(N)`: the exact mean,
/// second moment of the norm, and expected compute of the estimator. The
/// oracle all sampling-based behavior is tested against; refuses horizons
/// past [`ENUMERATION_LIMIT`].
pub fn enumerate_exact_moments(
    deltas: &DifferenceSequence,
    scheme: &WeightScheme,
    q: &TruncationDistribution,
    cost: &CostModel,
) -> Result<ExactMoments> {
    let h = check_horizons(deltas, scheme, q, cost)?;
    if h > ENUMERATION_LIMIT {
        return Err(Error::HorizonTooLarge(h, ENUMERATION_LIMIT));
    }
    let d = deltas.dim();
    let mut mean = vec![0.0; d];
    let mut expected_squared_norm = 0.0;
    let mut expected_compute = 0.0;
    let mut partial = vec![0.0; d];
    for drawn in 1..=h {
        // The weighted partial sum for this draw, built from scratch since
        // weights depend on the drawn depth.
        partial.iter_mut().for_each(|x| *x = 0.0);
        for n in 1..=drawn {
            let w = scheme.weight(n, drawn);
            if w == 0.0 {
                continue;
            }
            for (p, x) in partial.iter_mut().zip(deltas.term(n)) {
                *p += w * x;
            }
        }
        let p = q.prob(drawn);
        for (m, x) in mean.iter_mut().zip(&partial) {
            *m += p * x;
        }
        expected_squared_norm += p * partial.iter().map(|x| x * x).sum::<f64>();
        expected_compute += p * cost.charge(scheme, drawn);
    }
    Ok(ExactMoments {
        mean,
        expected_squared_norm,
        expected_compute,
    })
}
