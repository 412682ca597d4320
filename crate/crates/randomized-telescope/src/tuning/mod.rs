//! Online tuning of the estimator: which depths to evaluate, how to sample
//! among them, and how large a step to take.
//!
//! The objective throughout is expected optimization progress per unit of
//! compute, which for a fixed problem reduces to minimizing the product
//! `E[compute] · E‖Ĝ‖²` (its reciprocal is the estimator's relative
//! optimization efficiency). Everything here is driven by one statistic: an
//! exponential moving average of squared distances `D̄[i][j] ≈ E‖Ḡᵢ − Ḡⱼ‖²`
//! between gradients at different depths, with index 0 standing for the zero
//! vector so `D̄[0][j]` tracks squared gradient norms.

mod distances;
mod optimal_q;
mod stats;
mod subsequence;
mod tune;

pub use distances::SquaredDistanceTable;
pub use optimal_q::{optimal_q_russian_roulette, optimal_q_single_sample, ZERO_NORM_FLOOR};
pub use stats::{compute_and_variance, sequence_cost, EstimatorStats};
pub use subsequence::{greedy_subsequence_select, SubsequenceSelection};
pub use tune::{scale_learning_rate, tune, TunedEstimator};
