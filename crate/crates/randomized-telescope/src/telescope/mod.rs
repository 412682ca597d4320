//! Randomized telescope estimators.
//!
//! A quantity `Y_H = Σ_{n≤H} Δ_n` is estimated by drawing a truncation depth
//! `N ~ q` and returning `Σ_{n≤N} Δ_n W(n,N)`. The estimate is unbiased for
//! any weight function satisfying `Σ_{N≥n} W(n,N) q(N) = 1` for every index n
//! whose term can be nonzero. Two members of that family matter in practice:
//! single-sample weights `W(n,N) = 1{n=N}/q(N)`, which touch one term per
//! draw, and Russian-roulette weights `W(n,N) = 1{N≥n}/(1 − Σ_{m<n} q(m))`,
//! which keep every term up to the drawn depth.

mod distribution;
mod estimator;
mod weights;

pub use distribution::TruncationDistribution;
pub use estimator::{
    enumerate_exact_moments, rt_estimate, CostModel, DifferenceSequence, ExactMoments, RtSample,
};
pub use weights::{
    make_weight_scheme, validate_unbiasedness_constraint, UnbiasednessCheck, WeightKind,
    WeightScheme,
};

/// Tolerance for the unbiasedness constraint residual.
pub const UNBIASEDNESS_TOLERANCE: f64 = 1e-10;

/// Tolerance on |Σ probs − 1| when validating a distribution.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;
