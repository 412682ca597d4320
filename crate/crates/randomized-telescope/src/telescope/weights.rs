use super::{TruncationDistribution, UNBIASEDNESS_TOLERANCE};
use crate::{Error, Result};

/// Which weight function pairs with the sampled truncation depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// `W(n,N) = 1{n=N}/q(N)`: one term per draw, importance-weighted.
    SingleSample,
    /// `W(n,N) = 1{N≥n}/(1 − Σ_{m<n} q(m))`: keep every term up to the draw,
    /// each reweighted by its survival probability.
    RussianRoulette,
    /// A caller-supplied matrix; the unbiasedness constraint is on the caller.
    Explicit,
}

#[derive(Debug, Clone)]
enum Repr {
    SingleSample { inv_q: Vec<f64> },
    RussianRoulette { inv_tail: Vec<f64> },
    Explicit { rows: Vec<Vec<f64>> },
}

/// Weight function `W(n, N)` over a fixed horizon.
#[derive(Debug, Clone)]
pub struct WeightScheme {
    horizon: usize,
    repr: Repr,
}

impl WeightScheme {
    /// Single-sample weights for `q`. Every entry of `q` must be positive:
    /// a depth that is never drawn would make its term unreachable, which
    /// breaks unbiasedness unless that term is identically zero.
    pub fn single_sample(q: &TruncationDistribution) -> Result<Self> {
        let mut inv_q = Vec::with_capacity(q.horizon());
        for n in 1..=q.horizon() {
            let p = q.prob(n);
            if p <= 0.0 {
                return Err(Error::InvalidWeights(format!(
                    "q({n}) = 0: single-sample weights cannot reach term {n}"
                )));
            }
            inv_q.push(1.0 / p);
        }
        Ok(Self {
            horizon: q.horizon(),
            repr: Repr::SingleSample { inv_q },
        })
    }

    /// Russian-roulette weights for `q`. Requires a positive tail at every
    /// depth, i.e. `q(H) > 0`; a zero tail would leave later terms unreachable.
    pub fn russian_roulette(q: &TruncationDistribution) -> Result<Self> {
        let h = q.horizon();
        if q.prob(h) <= 0.0 {
            return Err(Error::InvalidWeights(format!(
                "q({h}) = 0: the tail past the last positive entry is unreachable"
            )));
        }
        // Survival probabilities as 1 − prefix sums, accumulated left to
        // right, so W(1,·) is exactly 1.
        let mut inv_tail = Vec::with_capacity(h);
        let mut prefix = 0.0;
        for n in 1..=h {
            let denom = 1.0 - prefix;
            if denom <= 0.0 {
                return Err(Error::InvalidWeights(format!(
                    "survival probability vanished at depth {n}"
                )));
            }
            inv_tail.push(1.0 / denom);
            prefix += q.prob(n);
        }
        Ok(Self {
            horizon: h,
            repr: Repr::RussianRoulette { inv_tail },
        })
    }

    /// Wrap an explicit `H×H` matrix, `rows[n-1][N-1] = W(n, N)`. Entries with
    /// `N < n` are ignored by the estimator. No unbiasedness check is done
    /// here; run [`validate_unbiasedness_constraint`] against your `q`.
    pub fn explicit(rows: Vec<Vec<f64>>) -> Result<Self> {
        let h = rows.len();
        if h == 0 {
            return Err(Error::InvalidWeights("empty weight matrix".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != h {
                return Err(Error::ShapeMismatch(format!(
                    "weight row {} has {} entries, want {h}",
                    i + 1,
                    row.len()
                )));
            }
            if row.iter().any(|w| !w.is_finite()) {
                return Err(Error::InvalidWeights(format!(
                    "weight row {} has a non-finite entry",
                    i + 1
                )));
            }
        }
        Ok(Self {
            horizon: h,
            repr: Repr::Explicit { rows },
        })
    }

    pub fn kind(&self) -> WeightKind {
        match self.repr {
            Repr::SingleSample { .. } => WeightKind::SingleSample,
            Repr::RussianRoulette { .. } => WeightKind::RussianRoulette,
            Repr::Explicit { .. } => WeightKind::Explicit,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `W(n, N)`, both arguments 1-based.
    pub fn weight(&self, n: usize, drawn: usize) -> f64 {
        debug_assert!(n >= 1 && n <= self.horizon && drawn >= 1 && drawn <= self.horizon);
        match &self.repr {
            Repr::SingleSample { inv_q } => {
                if n == drawn {
                    inv_q[drawn - 1]
                } else {
                    0.0
                }
            }
            Repr::RussianRoulette { inv_tail } => {
                if drawn >= n {
                    inv_tail[n - 1]
                } else {
                    0.0
                }
            }
            Repr::Explicit { rows } => rows[n - 1][drawn - 1],
        }
    }
}

/// Build the weight scheme of the given kind for `q`.
///
/// `Explicit` has no canonical construction from `q` alone; ask for it and
/// you get an error directing you to [`WeightScheme::explicit`].
pub fn make_weight_scheme(kind: WeightKind, q: &TruncationDistribution) -> Result<WeightScheme> {
    match kind {
        WeightKind::SingleSample => WeightScheme::single_sample(q),
        WeightKind::RussianRoulette => WeightScheme::russian_roulette(q),
        WeightKind::Explicit => Err(Error::InvalidWeights(
            "explicit schemes are built from a matrix, not from q".into(),
        )),
    }
}

/// Result of checking `Σ_{N≥n} W(n,N) q(N) = 1` for every n.
#[derive(Debug, Clone, Copy)]
pub struct UnbiasednessCheck {
    pub satisfied: bool,
    pub max_residual: f64,
}

/// Check the constraint that makes a randomized telescope unbiased: for every
/// index n, the weights along the depths that include term n must average to
/// exactly 1 under q. Tolerance 1e-10 on the worst index.
pub fn validate_unbiasedness_constraint(
    scheme: &WeightScheme,
    q: &TruncationDistribution,
) -> Result<UnbiasednessCheck> {
    if scheme.horizon() != q.horizon() {
        return Err(Error::ShapeMismatch(format!(
            "scheme horizon {} vs distribution horizon {}",
            scheme.horizon(),
            q.horizon()
        )));
    }
    let h = q.horizon();
    let mut max_residual = 0.0f64;
    for n in 1..=h {
        let mut acc = 0.0;
        for drawn in n..=h {
            acc += scheme.weight(n, drawn) * q.prob(drawn);
        }
        max_residual = max_residual.max((acc - 1.0).abs());
    }
    Ok(UnbiasednessCheck {
        satisfied: max_residual <= UNBIASEDNESS_TOLERANCE,
        max_residual,
    })
}
