//! Unbiased gradient estimation for objectives defined by loops and limits.
//!
//! Many training objectives are the limit of a sequence of increasingly
//! expensive approximations: an ODE solved on a finer and finer grid, an inner
//! optimization unrolled for more steps, a fixed point iterated towards
//! convergence. Cutting the sequence off at a fixed depth makes every gradient
//! after it biased. This crate implements the alternative: write the limit as
//! a telescoping sum, truncate it at a *random* depth `N ~ q`, and reweight the
//! surviving terms so the estimate is unbiased in expectation while most draws
//! stay cheap.
//!
//! The pieces, bottom to top:
//!
//! * [`telescope`] — truncation distributions, the single-sample and
//!   Russian-roulette weight schemes, sampling, and exact small-horizon
//!   enumeration of estimator moments.
//! * [`tuning`] — online selection of the subsequence of depths worth
//!   evaluating, the closed-form optimal `q` for each weight scheme, and
//!   learning-rate scaling that keeps a reference step size meaningful as the
//!   estimator's variance changes.
//! * [`optimizer`] — a budget-accounted SGD driver that retunes itself on a
//!   fixed compute cadence.
//! * [`problems`] — gradient sequences to optimize: a synthetic decay family
//!   with known constants, Lotka-Volterra variational inference, and a
//!   quadratic inner-loop meta-optimization toy.
//! * [`experiment`] — config-file driven experiment runs, reference-rate grid
//!   search, and CSV trace output. The `rt-experiment` binary is a thin shell
//!   over this module.
//!
//! Every source of randomness is an explicit seed, and runs with equal
//! configuration produce byte-identical traces.

pub mod experiment;
pub mod optimizer;
pub mod problems;
pub mod rng;
pub mod telescope;
pub mod tuning;

mod error;

pub use error::{Error, Result};
pub use optimizer::{
    run, tuning_charge, BudgetLedger, EstimatorChoice, OptimizerConfig, RunResult, TraceRecord,
};
pub use telescope::{
    enumerate_exact_moments, make_weight_scheme, rt_estimate, validate_unbiasedness_constraint,
    CostModel, DifferenceSequence, ExactMoments, RtSample, TruncationDistribution,
    UnbiasednessCheck, WeightKind, WeightScheme,
};
pub use tuning::{
    compute_and_variance, greedy_subsequence_select, optimal_q_russian_roulette,
    optimal_q_single_sample, scale_learning_rate, sequence_cost, tune, EstimatorStats,
    SquaredDistanceTable, SubsequenceSelection, TunedEstimator,
};

pub use problems::GradientSequence;
