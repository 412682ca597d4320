//! Grid execution, CSV output, and reference-rate search.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::experiment::config::{ExperimentConfig, ProblemId};
use crate::optimizer::{run, EstimatorChoice, OptimizerConfig, RunResult};
use crate::problems::{
    DecayKind, GradientSequence, LotkaVolterraVi, LvDataset, QuadraticMetaProblem,
    SyntheticDecayProblem,
};
use crate::telescope::CostModel;

/// Loss statistics for one estimator at one budget checkpoint, across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub estimator: EstimatorChoice,
    pub budget_checkpoint: f64,
    pub mean_loss: f64,
    pub std_loss: f64,
}

/// The summary table: estimator-major, checkpoints ascending within each.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub rows: Vec<SummaryRow>,
}

/// What [`run_experiment`] wrote, with the summary also held in memory.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub trace_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub summary: RunSummary,
}

/// Filesystem-safe estimator name used in trace filenames.
pub fn estimator_slug(est: EstimatorChoice) -> String {
    match est {
        EstimatorChoice::Untruncated => "untruncated".into(),
        EstimatorChoice::FixedTruncation(n) => format!("fixed{n}"),
        EstimatorChoice::SingleSample => "adaptive_ss".into(),
        EstimatorChoice::RussianRoulette => "adaptive_rr".into(),
    }
}

/// Human-readable estimator name used in summary rows; parses back via the
/// config syntax.
pub fn estimator_label(est: EstimatorChoice) -> String {
    match est {
        EstimatorChoice::Untruncated => "untruncated".into(),
        EstimatorChoice::FixedTruncation(n) => format!("fixed({n})"),
        EstimatorChoice::SingleSample => "adaptive-ss".into(),
        EstimatorChoice::RussianRoulette => "adaptive-rr".into(),
    }
}

/// Instantiates the problem a config describes.
pub fn build_problem(config: &ExperimentConfig) -> Result<Box<dyn GradientSequence>> {
    match config.problem {
        ProblemId::Synthetic => {
            let p = &config.synthetic;
            let kind = match p.kind.as_str() {
                "geometric" => DecayKind::Geometric {
                    rate: p.rate,
                    scale: p.scale,
                },
                "polynomial" => DecayKind::Polynomial {
                    exponent: p.exponent,
                    scale: p.scale,
                },
                other => {
                    return Err(Error::Config(format!(
                        "invalid value '{other}' for 'synthetic_kind': expected geometric or polynomial"
                    )))
                }
            };
            let costs = match p.cost.as_str() {
                "linear" => CostModel::linear(p.horizon, p.reuse),
                "doubling" => CostModel::doubling(p.horizon, p.reuse),
                other => {
                    return Err(Error::Config(format!(
                        "invalid value '{other}' for 'synthetic_cost': expected linear or doubling"
                    )))
                }
            };
            let eye: Vec<Vec<f64>> = (0..p.dim)
                .map(|i| (0..p.dim).map(|j| f64::from(i == j)).collect())
                .collect();
            let problem = SyntheticDecayProblem::new(
                kind,
                eye,
                vec![0.0; p.dim],
                p.horizon,
                p.problem_seed,
                costs,
            )?;
            Ok(Box::new(problem))
        }
        ProblemId::LotkaVolterra => {
            let p = &config.lv;
            let dataset = LvDataset::generate(p.dataset_seed)?;
            let problem = LotkaVolterraVi::with_batches(dataset, p.train_batch, p.eval_batch)?;
            Ok(Box::new(problem))
        }
        ProblemId::QuadraticMeta => {
            let p = &config.meta;
            let problem =
                QuadraticMetaProblem::new(p.curvatures.clone(), p.init.clone(), p.t0, p.horizon)?;
            Ok(Box::new(problem))
        }
    }
}

// 17 significant digits: enough to reproduce the exact f64 on re-parse.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn trace_csv(result: &RunResult) -> String {
    let mut out =
        String::from("step,budget_spent,gradient_evaluations,truncation_drawn,learning_rate,eval_loss\n");
    for r in &result.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.step_index,
            fmt_f64(r.budget_spent),
            r.gradient_evaluations,
            r.truncation_drawn,
            fmt_f64(r.learning_rate),
            fmt_f64(r.evaluation_loss),
        );
    }
    out
}

/// The geometric budget checkpoints a summary reports:
/// `budget × {1/64, 1/32, …, 1}`.
pub fn budget_checkpoints(budget_limit: f64) -> Vec<f64> {
    (0..=6).rev().map(|k| budget_limit / f64::from(1 << k)).collect()
}

// Evaluation loss the trace reports at a spending level: the latest record
// at or under it, falling back to the first record when even that one
// (the pre-loop baseline plus any initial tune) overshoots.
fn loss_at_checkpoint(result: &RunResult, checkpoint: f64) -> f64 {
    let idx = result
        .records
        .partition_point(|r| r.budget_spent <= checkpoint);
    result.records[idx.saturating_sub(1)].evaluation_loss
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs the full (estimator × seed) grid and writes one trace CSV per run
/// plus a summary CSV of per-estimator loss statistics at the budget
/// checkpoints. Identical configs produce byte-identical files.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let problem = build_problem(config)?;

    let mut results: Vec<(EstimatorChoice, Vec<RunResult>)> = Vec::new();
    for &estimator in &config.estimators {
        let mut per_seed = Vec::new();
        for &seed in &config.seeds {
            let opt = OptimizerConfig {
                estimator,
                reference_rate: config.reference_rate,
                ema_decay: config.ema_decay,
                tuning_frequency: config.tuning_frequency,
                eval_every: config.eval_every,
                seed,
            };
            per_seed.push(run(problem.as_ref(), &opt, config.budget_limit, None)?);
        }
        results.push((estimator, per_seed));
    }

    let checkpoints = budget_checkpoints(config.budget_limit);
    let mut rows = Vec::new();
    for (estimator, per_seed) in &results {
        for &checkpoint in &checkpoints {
            let losses: Vec<f64> = per_seed
                .iter()
                .map(|r| loss_at_checkpoint(r, checkpoint))
                .collect();
            let (mean_loss, std_loss) = mean_and_std(&losses);
            rows.push(SummaryRow {
                estimator: *estimator,
                budget_checkpoint: checkpoint,
                mean_loss,
                std_loss,
            });
        }
    }
    let summary = RunSummary { rows };

    fs::create_dir_all(&config.output_dir)?;
    let mut trace_paths = Vec::new();
    for (estimator, per_seed) in &results {
        for (&seed, result) in config.seeds.iter().zip(per_seed) {
            let name = format!(
                "trace_{}_{}_seed{}.csv",
                config.problem.as_str(),
                estimator_slug(*estimator),
                seed
            );
            let path = config.output_dir.join(name);
            fs::write(&path, trace_csv(result))?;
            trace_paths.push(path);
        }
    }

    let mut out = String::from("estimator,budget_checkpoint,mean_loss,std_loss\n");
    for row in &summary.rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            estimator_label(row.estimator),
            fmt_f64(row.budget_checkpoint),
            fmt_f64(row.mean_loss),
            fmt_f64(row.std_loss),
        );
    }
    let summary_path = config
        .output_dir
        .join(format!("summary_{}.csv", config.problem.as_str()));
    fs::write(&summary_path, out)?;

    Ok(ExperimentOutput {
        trace_paths,
        summary_path,
        summary,
    })
}

/// The default learning-rate grid: `a × 10^{-b}` for `a ∈ {1.0, 2.2, 5.5}`
/// and `b ∈ {0, 1, 2, 3, 5}`, largest first.
pub fn default_rate_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = [0, 1, 2, 3, 5]
        .iter()
        .flat_map(|&b| [1.0, 2.2, 5.5].map(|a| a * 10f64.powi(-b)))
        .collect();
    grid.sort_by(|x, y| y.partial_cmp(x).expect("finite grid"));
    grid
}

/// Picks the rate whose short untruncated run ends at the lowest
/// evaluation loss; exact ties go to the smaller rate. A candidate that
/// errors out or lands on a non-finite loss is treated as diverged; if all
/// of them diverge, that is an error.
pub fn grid_search_reference_rate(
    problem: &dyn GradientSequence,
    candidates: &[f64],
    budget_per_candidate: f64,
    seed: u64,
) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::Config("no candidate learning rates given".into()));
    }
    for &rate in candidates {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::NonPositive("candidate learning rate", rate));
        }
    }

    let mut best: Option<(f64, f64)> = None; // (loss, rate)
    for &rate in candidates {
        let config = OptimizerConfig::new(EstimatorChoice::Untruncated, rate, seed);
        let loss = match run(problem, &config, budget_per_candidate, None) {
            Ok(result) => result.final_evaluation_loss,
            Err(Error::BudgetTooSmall { .. }) => {
                // Not a divergence: no candidate could run at all.
                return Err(Error::BudgetTooSmall {
                    budget: budget_per_candidate,
                    required: problem.cost_model().cost(problem.horizon()),
                });
            }
            Err(_) => continue,
        };
        if !loss.is_finite() {
            continue;
        }
        best = match best {
            Some((l, r)) if l < loss || (l == loss && r < rate) => Some((l, r)),
            _ => Some((loss, rate)),
        };
    }
    best.map(|(_, rate)| rate)
        .ok_or_else(|| Error::Config("every candidate learning rate diverged".into()))
}

/// Renders the ground-truth record backing a problem's observations.
/// Only the Lotka-Volterra problem has a dataset to export.
pub fn export_dataset(problem: ProblemId, seed: u64) -> Result<String> {
    match problem {
        ProblemId::LotkaVolterra => Ok(LvDataset::generate(seed)?.to_text()),
        other => Err(Error::Config(format!(
            "problem '{}' has no dataset to export",
            other.as_str()
        ))),
    }
}
