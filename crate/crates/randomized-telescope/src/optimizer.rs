//! Budget-accounted stochastic gradient descent over a [`GradientSequence`].
//!
//! The driver owns the loop that the rest of the crate serves: periodically
//! re-tune the estimator at the current parameters, then take telescoped
//! gradient steps until the compute budget runs out, charging every gradient
//! evaluation to a ledger denominated in the problem's own cost units.
//! Fixed-depth and full-depth baselines run through the same loop with a
//! point-mass truncation distribution and tuning disabled, so budget
//! comparisons across estimators are like for like.

use crate::error::{Error, Result};
use crate::problems::GradientSequence;
use crate::rng::{self, tag};
use crate::telescope::{
    make_weight_scheme, CostModel, TruncationDistribution, WeightKind, WeightScheme,
};
use crate::tuning::{tune, SquaredDistanceTable, TunedEstimator};

/// Which gradient estimator drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorChoice {
    /// Always evaluate the deepest gradient: the plain-SGD baseline.
    Untruncated,
    /// Always evaluate the given depth: the biased truncation baseline.
    FixedTruncation(usize),
    /// Adaptively tuned single-sample telescope.
    SingleSample,
    /// Adaptively tuned Russian-roulette telescope.
    RussianRoulette,
}

impl EstimatorChoice {
    /// Whether this estimator re-tunes itself during the run.
    pub fn is_adaptive(self) -> bool {
        self.weight_kind().is_some()
    }

    fn weight_kind(self) -> Option<WeightKind> {
        match self {
            EstimatorChoice::Untruncated | EstimatorChoice::FixedTruncation(_) => None,
            EstimatorChoice::SingleSample => Some(WeightKind::SingleSample),
            EstimatorChoice::RussianRoulette => Some(WeightKind::RussianRoulette),
        }
    }
}

/// Run settings; see the field docs for defaults taken by [`OptimizerConfig::new`].
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub estimator: EstimatorChoice,
    /// Step size for the full-depth estimator. Adaptive estimators rescale
    /// it by their measured noise; baselines use it as is.
    pub reference_rate: f64,
    /// Exponential decay of the squared-distance averages (default 0.9).
    pub ema_decay: f64,
    /// A tune is scheduled every `tuning_frequency · C̄(H̄)` budget units
    /// (default 5).
    pub tuning_frequency: usize,
    /// Evaluation cadence in budget units; `None` means `C̄(H̄)`.
    pub eval_every: Option<f64>,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn new(estimator: EstimatorChoice, reference_rate: f64, seed: u64) -> Self {
        Self {
            estimator,
            reference_rate,
            ema_decay: 0.9,
            tuning_frequency: 5,
            eval_every: None,
            seed,
        }
    }

    fn validate(&self, problem: &dyn GradientSequence) -> Result<()> {
        if !(self.reference_rate > 0.0 && self.reference_rate.is_finite()) {
            return Err(Error::NonPositive("reference rate", self.reference_rate));
        }
        if !(self.ema_decay > 0.0 && self.ema_decay < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "EMA decay must lie in (0, 1), got {}",
                self.ema_decay
            )));
        }
        if self.tuning_frequency == 0 {
            return Err(Error::InvalidParameter(
                "tuning frequency must be at least 1".into(),
            ));
        }
        if let Some(e) = self.eval_every {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::NonPositive("evaluation cadence", e));
            }
        }
        if let EstimatorChoice::FixedTruncation(n) = self.estimator {
            if n == 0 || n > problem.horizon() {
                return Err(Error::InvalidParameter(format!(
                    "fixed truncation depth {n} outside 1..={}",
                    problem.horizon()
                )));
            }
        }
        Ok(())
    }
}

/// Cumulative compute accounting for one run, in units of the problem's
/// cost model.
#[derive(Debug, Clone, Copy)]
pub struct BudgetLedger {
    spent: f64,
    next_tune: f64,
    tuning_frequency: usize,
}

impl BudgetLedger {
    pub fn new(tuning_frequency: usize) -> Self {
        Self {
            spent: 0.0,
            next_tune: 0.0,
            tuning_frequency,
        }
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    /// A tune is due whenever spending has caught up with the schedule; a
    /// fresh ledger is due immediately.
    pub fn needs_tune(&self) -> bool {
        self.spent >= self.next_tune
    }

    pub fn charge_step(&mut self, amount: f64) {
        self.spent += amount;
    }

    /// Charges one tuning pass — every depth when evaluations share no work,
    /// one full-depth evaluation when they do — and pushes the next tune
    /// `tuning_frequency` full evaluations into the future.
    pub fn charge_tuning(&mut self, costs: &CostModel) {
        self.spent += tuning_charge(costs);
        self.next_tune += self.tuning_frequency as f64 * costs.cost(costs.horizon());
    }
}

/// Compute consumed by one tuning pass: `Σᵢ C̄(i)` without reuse, `C̄(H̄)`
/// with it.
pub fn tuning_charge(costs: &CostModel) -> f64 {
    if costs.reuse() {
        costs.cost(costs.horizon())
    } else {
        (1..=costs.horizon()).map(|i| costs.cost(i)).sum()
    }
}

/// One optimization step (or the pre-loop baseline, `step_index` 0) as it
/// lands in a trace.
///
/// `evaluation_loss` is the most recent evaluation — refreshed on the
/// evaluation cadence, carried forward between refreshes. `truncation_drawn`
/// is the deepest base-sequence depth the step evaluated (0 for the
/// baseline record, which precedes any draw). `gradient_evaluations` counts
/// cumulative calls to the problem's gradient oracle, tuning included, so
/// traces can be plotted against either budget or oracle calls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub step_index: usize,
    pub budget_spent: f64,
    pub gradient_evaluations: usize,
    pub truncation_drawn: usize,
    pub learning_rate: f64,
    pub evaluation_loss: f64,
}

/// A finished run: the per-step trace plus the terminal state.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<TraceRecord>,
    pub final_theta: Vec<f64>,
    /// Fresh evaluation at the final parameters (not part of the cadence).
    pub final_evaluation_loss: f64,
    pub budget_spent: f64,
    pub gradient_evaluations: usize,
}

// The estimator a run is currently stepping with: positions 1..=len map to
// base-sequence depths, q and the weights are over positions.
struct ActiveEstimator {
    depths: Vec<usize>,
    q: TruncationDistribution,
    weights: WeightScheme,
    learning_rate: f64,
}

impl ActiveEstimator {
    fn point_mass(depth: usize, learning_rate: f64) -> Result<Self> {
        let q = TruncationDistribution::new(vec![1.0])?;
        let weights = make_weight_scheme(WeightKind::SingleSample, &q)?;
        Ok(Self {
            depths: vec![depth],
            q,
            weights,
            learning_rate,
        })
    }

    fn from_tuned(tuned: TunedEstimator) -> Self {
        Self {
            depths: tuned.subsequence.indices().to_vec(),
            q: tuned.q,
            weights: tuned.weights,
            learning_rate: tuned.learning_rate,
        }
    }
}

// Telescoped gradient estimate for one drawn position: evaluates only the
// depths with nonzero weight (each at most once, all on the shared noise
// seed) and returns the estimate with the evaluation count.
fn telescope_gradient(
    problem: &dyn GradientSequence,
    theta: &[f64],
    est: &ActiveEstimator,
    drawn: usize,
    noise_seed: u64,
) -> Result<(Vec<f64>, usize)> {
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; est.depths.len() + 1];
    let mut evals = 0usize;
    let mut estimate = vec![0.0; problem.dim()];
    for n in 1..=drawn {
        let w = est.weights.weight(n, drawn);
        if w == 0.0 {
            continue;
        }
        for idx in [n - 1, n] {
            if idx >= 1 && cache[idx].is_none() {
                cache[idx] = Some(problem.gradient(theta, est.depths[idx - 1], noise_seed)?);
                evals += 1;
            }
        }
        let upper = cache[n].as_ref().expect("filled above");
        if n == 1 {
            // Δ₁ telescopes against the zero vector.
            for (e, u) in estimate.iter_mut().zip(upper) {
                *e += w * u;
            }
        } else {
            let lower = cache[n - 1].as_ref().expect("filled above");
            for (e, (u, l)) in estimate.iter_mut().zip(upper.iter().zip(lower)) {
                *e += w * (u - l);
            }
        }
    }
    Ok((estimate, evals))
}

// What one step at the drawn position costs: the drawn depth alone when
// deeper evaluations subsume shallower ones, the whole prefix of the
// selection otherwise. Matches the expected-compute model the tuner
// optimizes, so tuned trade-offs are the trade-offs actually paid.
fn step_charge(costs: &CostModel, depths: &[usize], drawn: usize) -> f64 {
    if costs.reuse() {
        costs.cost(depths[drawn - 1])
    } else {
        depths[..drawn].iter().map(|&d| costs.cost(d)).sum()
    }
}

/// Runs budgeted SGD and returns the trace.
///
/// The run spends until `budget_limit` (the final step may overshoot; it is
/// charged in full). Adaptive estimators tune before their first step and
/// whenever spending reaches the tuning schedule. `eval_hook` — defaulting
/// to the problem's own evaluation loss on a run-fixed seed — is called on
/// the evaluation cadence and its compute is never charged.
///
/// Identical inputs produce bit-identical traces: all randomness derives
/// from `config.seed` through tagged streams.
pub fn run(
    problem: &dyn GradientSequence,
    config: &OptimizerConfig,
    budget_limit: f64,
    eval_hook: Option<&mut dyn FnMut(&[f64]) -> Result<f64>>,
) -> Result<RunResult> {
    config.validate(problem)?;
    if !budget_limit.is_finite() {
        return Err(Error::NonPositive("budget limit", budget_limit));
    }
    let costs = problem.cost_model();
    let horizon = problem.horizon();
    let kind = config.estimator.weight_kind();

    let required = match config.estimator {
        EstimatorChoice::SingleSample | EstimatorChoice::RussianRoulette => tuning_charge(costs),
        EstimatorChoice::Untruncated => costs.cost(horizon),
        EstimatorChoice::FixedTruncation(n) => costs.cost(n),
    };
    if budget_limit < required {
        return Err(Error::BudgetTooSmall {
            budget: budget_limit,
            required,
        });
    }

    let eval_seed = rng::derive_seed(config.seed, tag::EVAL, 0);
    let mut hook: Box<dyn FnMut(&[f64]) -> Result<f64> + '_> = match eval_hook {
        Some(h) => Box::new(h),
        None => Box::new(move |theta: &[f64]| problem.eval_loss(theta, eval_seed)),
    };

    let mut theta = problem.initial_point(config.seed);
    let mut ledger = BudgetLedger::new(config.tuning_frequency);
    let mut table = SquaredDistanceTable::new(horizon, config.ema_decay)?;
    let mut trunc_rng = rng::stream(config.seed, tag::TRUNCATION, 0);
    let mut noise_counter: u64 = 0;
    let next_noise_seed = |counter: &mut u64| {
        let s = rng::derive_seed(config.seed, tag::STEP_NOISE, *counter);
        *counter += 1;
        s
    };
    let mut gradient_evaluations = 0usize;

    // The very first action is a tune: q is undefined before one. Baselines
    // are their own (trivial) estimator from the start and never tune.
    let mut active = match kind {
        Some(wk) => {
            let seed = next_noise_seed(&mut noise_counter);
            let tuned = tune(problem, &theta, &mut table, wk, config.reference_rate, seed)?;
            gradient_evaluations += horizon;
            ledger.charge_tuning(costs);
            ActiveEstimator::from_tuned(tuned)
        }
        None => {
            let depth = match config.estimator {
                EstimatorChoice::FixedTruncation(n) => n,
                _ => horizon,
            };
            ActiveEstimator::point_mass(depth, config.reference_rate)?
        }
    };

    let eval_every = config.eval_every.unwrap_or_else(|| costs.cost(horizon));
    let mut last_eval = hook(&theta)?;
    let mut next_eval = eval_every;

    let mut records = vec![TraceRecord {
        step_index: 0,
        budget_spent: ledger.spent(),
        gradient_evaluations,
        truncation_drawn: 0,
        learning_rate: active.learning_rate,
        evaluation_loss: last_eval,
    }];

    let mut step_index = 0usize;
    while ledger.spent() < budget_limit {
        if kind.is_some() && ledger.needs_tune() {
            let wk = kind.expect("adaptive kind checked above");
            let seed = next_noise_seed(&mut noise_counter);
            let tuned = tune(problem, &theta, &mut table, wk, config.reference_rate, seed)?;
            gradient_evaluations += horizon;
            ledger.charge_tuning(costs);
            active = ActiveEstimator::from_tuned(tuned);
        }

        let drawn = active.q.sample(&mut trunc_rng);
        let seed = next_noise_seed(&mut noise_counter);
        let (estimate, evals) = telescope_gradient(problem, &theta, &active, drawn, seed)?;
        gradient_evaluations += evals;
        ledger.charge_step(step_charge(costs, &active.depths, drawn));
        for (t, g) in theta.iter_mut().zip(&estimate) {
            *t -= active.learning_rate * g;
        }
        step_index += 1;

        if ledger.spent() >= next_eval {
            last_eval = hook(&theta)?;
            // Jump the cadence past the spend in one move; the loop only
            // mops up float rounding.
            let jumps = ((ledger.spent() - next_eval) / eval_every).floor() + 1.0;
            next_eval += jumps * eval_every;
            while next_eval <= ledger.spent() {
                next_eval += eval_every;
            }
        }

        records.push(TraceRecord {
            step_index,
            budget_spent: ledger.spent(),
            gradient_evaluations,
            truncation_drawn: active.depths[drawn - 1],
            learning_rate: active.learning_rate,
            evaluation_loss: last_eval,
        });
    }

    let final_evaluation_loss = hook(&theta)?;
    Ok(RunResult {
        records,
        final_theta: theta,
        final_evaluation_loss,
        budget_spent: ledger.spent(),
        gradient_evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{DecayKind, QuadraticMetaProblem, SyntheticDecayProblem};

    fn geometric_problem(horizon: usize, costs: CostModel) -> SyntheticDecayProblem {
        let kind = DecayKind::Geometric {
            rate: 0.5,
            scale: 1.0,
        };
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        SyntheticDecayProblem::new(kind, eye, vec![0.4, -1.1], horizon, 5, costs).unwrap()
    }

    #[test]
    fn untruncated_descends_a_quadratic_monotonically() {
        let problem = geometric_problem(4, CostModel::linear(4, true));
        let mut config = OptimizerConfig::new(EstimatorChoice::Untruncated, 0.5, 0);
        config.eval_every = Some(1e-9); // refresh the evaluation every step
        let result = run(&problem, &config, 200.0, None).unwrap();

        let losses: Vec<f64> = result.records.iter().map(|r| r.evaluation_loss).collect();
        for pair in losses.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "loss rose: {pair:?}");
        }
        // Contraction factor 1 − ηa = 0.5 per step, 50 steps in the budget.
        assert!(losses[0] > 1e-6);
        assert!(*losses.last().unwrap() < 1e-12 * losses[0]);

        // Full-depth baseline: every step draws the horizon, pays C̄(H̄),
        // keeps the reference rate, and calls the oracle once.
        for pair in result.records.windows(2) {
            assert_eq!(pair[1].budget_spent - pair[0].budget_spent, 4.0);
            assert_eq!(pair[1].truncation_drawn, 4);
            assert_eq!(pair[1].learning_rate, 0.5);
            assert_eq!(pair[1].gradient_evaluations - pair[0].gradient_evaluations, 1);
        }
        assert_eq!(result.budget_spent, 200.0);
    }

    #[test]
    fn fixed_truncation_never_tunes_and_charges_its_depth() {
        let problem = geometric_problem(4, CostModel::linear(4, false));
        let config = OptimizerConfig::new(EstimatorChoice::FixedTruncation(2), 0.3, 1);
        let result = run(&problem, &config, 50.0, None).unwrap();

        assert_eq!(result.records[0].budget_spent, 0.0);
        for pair in result.records.windows(2) {
            assert_eq!(pair[1].budget_spent - pair[0].budget_spent, 2.0);
            assert_eq!(pair[1].truncation_drawn, 2);
            assert_eq!(pair[1].learning_rate, 0.3);
        }
        assert_eq!(result.records.len(), 26); // baseline + 25 steps of cost 2
    }

    #[test]
    fn tuning_charges_the_cost_sum_and_advances_the_schedule() {
        // Doubling costs without reuse: one tune costs 2+4+8+16+32 = 62,
        // under twice the full evaluation (64).
        let problem = geometric_problem(5, CostModel::doubling(5, false));
        let mut config = OptimizerConfig::new(EstimatorChoice::SingleSample, 0.1, 3);
        config.tuning_frequency = 2; // second tune due at spending 64
        let result = run(&problem, &config, 400.0, None).unwrap();

        assert_eq!(result.records[0].budget_spent, 62.0);
        assert_eq!(result.records[0].gradient_evaluations, 5);
        assert_eq!(result.records[0].step_index, 0);
        assert_eq!(result.records[0].truncation_drawn, 0);

        // Tunes show up as +horizon jumps in the oracle counter (a step
        // adds at most 2 under single-sample weights).
        let tune_records: Vec<usize> = result
            .records
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].gradient_evaluations - w[0].gradient_evaluations > 2)
            .map(|(i, _)| i + 1)
            .collect();
        assert!(!tune_records.is_empty());
        // The second tune fires on the first step after spending reaches 64.
        let first = tune_records[0];
        assert!(result.records[first - 1].budget_spent >= 64.0);
        assert!(result.records[first.saturating_sub(2)].budget_spent < 64.0 || first == 1);

        // With reuse, a tune costs a single full evaluation.
        let problem = geometric_problem(5, CostModel::doubling(5, true));
        let result = run(&problem, &config, 400.0, None).unwrap();
        assert_eq!(result.records[0].budget_spent, 32.0);
    }

    #[test]
    fn spending_is_exactly_the_sum_of_charges() {
        // Reuse + single-sample: each step charges the drawn depth's cost,
        // each tune charges C̄(H̄), and the trace exposes both (tunes as
        // +horizon jumps of the oracle counter). Recomputing the ledger in
        // record order must reproduce it bit for bit.
        let problem = geometric_problem(6, CostModel::linear(6, true));
        let config = OptimizerConfig::new(EstimatorChoice::SingleSample, 0.2, 9);
        let result = run(&problem, &config, 500.0, None).unwrap();

        let costs = problem.cost_model();
        let mut replayed = 0.0;
        let mut prev_evals = 0;
        for record in &result.records {
            let jump = record.gradient_evaluations - prev_evals;
            if record.step_index == 0 || jump > 2 {
                replayed += tuning_charge(costs);
            }
            if record.step_index > 0 {
                replayed += costs.cost(record.truncation_drawn);
            }
            prev_evals = record.gradient_evaluations;
            assert_eq!(record.budget_spent, replayed);
        }
        assert_eq!(result.budget_spent, replayed);

        for pair in result.records.windows(2) {
            assert!(pair[1].budget_spent >= pair[0].budget_spent);
        }
    }

    #[test]
    fn resampled_estimates_are_unbiased_for_the_full_gradient() {
        let problem = geometric_problem(5, CostModel::linear(5, true));
        let theta = vec![1.3, -0.7];
        let full = problem.gradient(&theta, 5, 0).unwrap();

        for kind in [WeightKind::SingleSample, WeightKind::RussianRoulette] {
            let mut table = SquaredDistanceTable::new(5, 0.9).unwrap();
            let tuned = tune(&problem, &theta, &mut table, kind, 0.1, 0).unwrap();
            let active = ActiveEstimator::from_tuned(tuned);

            let resamples = 10_000;
            let mut rng = rng::stream(77, tag::TRUNCATION, 1);
            let mut sum = vec![0.0; 2];
            let mut sq = vec![0.0; 2];
            for k in 0..resamples {
                let drawn = active.q.sample(&mut rng);
                let (est, _) =
                    telescope_gradient(&problem, &theta, &active, drawn, k as u64).unwrap();
                for j in 0..2 {
                    sum[j] += est[j];
                    sq[j] += est[j] * est[j];
                }
            }
            for j in 0..2 {
                let mean = sum[j] / resamples as f64;
                let var = (sq[j] / resamples as f64 - mean * mean).max(0.0);
                let se = (var / resamples as f64).sqrt();
                assert!(
                    (mean - full[j]).abs() <= 5.0 * se.max(1e-12),
                    "{kind:?} coordinate {j}: mean {mean}, want {}, se {se}",
                    full[j]
                );
            }
        }
    }

    #[test]
    fn traces_are_bit_identical_across_reruns() {
        let problem = geometric_problem(5, CostModel::linear(5, false));
        for estimator in [
            EstimatorChoice::SingleSample,
            EstimatorChoice::RussianRoulette,
        ] {
            let config = OptimizerConfig::new(estimator, 0.2, 11);
            let a = run(&problem, &config, 300.0, None).unwrap();
            let b = run(&problem, &config, 300.0, None).unwrap();
            assert_eq!(a.records, b.records);
            assert_eq!(a.final_theta, b.final_theta);

            let other = OptimizerConfig::new(estimator, 0.2, 12);
            let c = run(&problem, &other, 300.0, None).unwrap();
            assert_ne!(a.records, c.records);
        }
    }

    #[test]
    fn budgets_below_one_tune_are_rejected() {
        let problem = geometric_problem(5, CostModel::doubling(5, false));
        let config = OptimizerConfig::new(EstimatorChoice::SingleSample, 0.1, 0);
        // One tune costs 62.
        assert!(matches!(
            run(&problem, &config, 61.9, None),
            Err(Error::BudgetTooSmall { required, .. }) if required == 62.0
        ));

        let config = OptimizerConfig::new(EstimatorChoice::Untruncated, 0.1, 0);
        assert!(matches!(
            run(&problem, &config, 31.0, None),
            Err(Error::BudgetTooSmall { required, .. }) if required == 32.0
        ));

        // A zero budget is "too small", not a separate failure mode.
        let config = OptimizerConfig::new(EstimatorChoice::SingleSample, 0.1, 0);
        assert!(matches!(
            run(&problem, &config, 0.0, None),
            Err(Error::BudgetTooSmall { budget, .. }) if budget == 0.0
        ));
    }

    #[test]
    fn evaluation_cadence_counts_and_carries_forward() {
        let problem = geometric_problem(4, CostModel::linear(4, true));
        let mut config = OptimizerConfig::new(EstimatorChoice::FixedTruncation(1), 0.05, 2);
        config.eval_every = Some(3.0);

        let mut calls = 0usize;
        let mut hook = |theta: &[f64]| {
            calls += 1;
            problem.loss(theta, 4, 0)
        };
        // Steps cost 1 each: spending hits 3, 6, 9 → three cadence
        // evaluations, plus the baseline and the final one.
        let result = run(&problem, &config, 10.0, Some(&mut hook)).unwrap();
        assert_eq!(calls, 5);
        assert_eq!(result.records.len(), 11);

        // Records between refreshes carry the last evaluation.
        assert_eq!(result.records[1].evaluation_loss, result.records[0].evaluation_loss);
        assert_ne!(result.records[3].evaluation_loss, result.records[2].evaluation_loss);
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let problem = geometric_problem(4, CostModel::linear(4, true));
        let mut config = OptimizerConfig::new(EstimatorChoice::SingleSample, 0.1, 0);
        config.ema_decay = 1.0;
        assert!(run(&problem, &config, 100.0, None).is_err());

        let mut config = OptimizerConfig::new(EstimatorChoice::SingleSample, -0.1, 0);
        assert!(run(&problem, &config, 100.0, None).is_err());
        config.reference_rate = 0.1;
        config.tuning_frequency = 0;
        assert!(run(&problem, &config, 100.0, None).is_err());

        let config = OptimizerConfig::new(EstimatorChoice::FixedTruncation(9), 0.1, 0);
        assert!(run(&problem, &config, 100.0, None).is_err());

        let config = OptimizerConfig::new(EstimatorChoice::Untruncated, 0.1, 0);
        assert!(run(&problem, &config, f64::NAN, None).is_err());
    }

    #[test]
    fn problem_failures_propagate_out_of_the_run() {
        // The stiff slow coordinate keeps dL/dη₀ below −2 everywhere the
        // initial point can land, so an absurd reference rate throws the
        // inner learning rate past its stability bound on the first step.
        // The run must surface the problem's error, not swallow it.
        let problem =
            QuadraticMetaProblem::new(vec![0.01, 1.0], vec![100.0, 1.0], 5000.0, 1).unwrap();
        let config = OptimizerConfig::new(EstimatorChoice::Untruncated, 1e4, 0);
        let err = run(&problem, &config, 500.0, None);
        assert!(err.is_err());
    }

    #[test]
    fn adaptive_runs_mostly_draw_cheap_depths() {
        // Geometric decay with steep costs: the tuned estimator should lean
        // on shallow depths and only occasionally pay for deep ones.
        let problem = geometric_problem(6, CostModel::doubling(6, true));
        let config = OptimizerConfig::new(EstimatorChoice::SingleSample, 0.2, 4);
        let result = run(&problem, &config, 2000.0, None).unwrap();
        let steps: Vec<&TraceRecord> =
            result.records.iter().filter(|r| r.step_index > 0).collect();
        let shallow = steps.iter().filter(|r| r.truncation_drawn <= 3).count();
        assert!(
            shallow * 2 > steps.len(),
            "only {shallow} of {} draws were shallow",
            steps.len()
        );
        // …while the telescope still reaches the full horizon sometimes.
        assert!(steps.iter().any(|r| r.truncation_drawn == 6));
    }
}
