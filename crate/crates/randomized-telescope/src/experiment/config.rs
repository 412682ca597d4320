//! Flat key-value experiment configuration.
//!
//! The config format is one `key = value` assignment per line, `#` comments,
//! and command-line overrides that are applied after the file in the order
//! given (so the last assignment to a key wins). Unknown keys are errors:
//! a typo should fail the run, not silently fall back to a default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::optimizer::EstimatorChoice;

/// Which problem family an experiment optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    Synthetic,
    LotkaVolterra,
    QuadraticMeta,
}

impl ProblemId {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemId::Synthetic => "synthetic",
            ProblemId::LotkaVolterra => "lotka_volterra",
            ProblemId::QuadraticMeta => "quadratic_meta",
        }
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(ProblemId::Synthetic),
            "lotka_volterra" => Ok(ProblemId::LotkaVolterra),
            "quadratic_meta" => Ok(ProblemId::QuadraticMeta),
            other => Err(Error::Config(format!(
                "unknown problem '{other}' (expected synthetic, lotka_volterra, or quadratic_meta)"
            ))),
        }
    }
}

/// Synthetic decay-family parameters (identity curvature, zero optimum;
/// the decay structure is what the family is for).
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    /// "geometric" or "polynomial".
    pub kind: String,
    /// Geometric decay rate in (0, 1).
    pub rate: f64,
    /// Polynomial decay exponent.
    pub exponent: f64,
    pub scale: f64,
    pub horizon: usize,
    pub dim: usize,
    /// "linear" or "doubling".
    pub cost: String,
    pub reuse: bool,
    /// Seed for the frozen tail directions — part of the problem instance,
    /// deliberately separate from the per-run seeds.
    pub problem_seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            kind: "geometric".into(),
            rate: 0.5,
            exponent: 2.0,
            scale: 1.0,
            horizon: 30,
            dim: 2,
            cost: "linear".into(),
            reuse: true,
            problem_seed: 0,
        }
    }
}

/// Lotka-Volterra variational-inference parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LvParams {
    pub dataset_seed: u64,
    pub train_batch: usize,
    pub eval_batch: usize,
}

impl Default for LvParams {
    fn default() -> Self {
        Self {
            dataset_seed: 0,
            train_batch: 64,
            eval_batch: 512,
        }
    }
}

/// Quadratic meta-optimization parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaParams {
    pub curvatures: Vec<f64>,
    pub init: Vec<f64>,
    pub t0: f64,
    pub horizon: usize,
}

impl Default for MetaParams {
    fn default() -> Self {
        Self {
            curvatures: vec![1.0, 0.3],
            init: vec![2.0, -1.5],
            t0: 5000.0,
            horizon: 10,
        }
    }
}

/// A fully parsed experiment: the grid to run and where to write it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemId,
    pub estimators: Vec<EstimatorChoice>,
    pub seeds: Vec<u64>,
    pub budget_limit: f64,
    pub reference_rate: f64,
    pub tuning_frequency: usize,
    pub ema_decay: f64,
    pub eval_every: Option<f64>,
    pub output_dir: PathBuf,
    pub synthetic: SyntheticParams,
    pub lv: LvParams,
    pub meta: MetaParams,
}

impl ExperimentConfig {
    /// Parses a config file's text plus `key=value` override strings
    /// (applied in order, last wins).
    pub fn from_sources(text: &str, overrides: &[String]) -> Result<Self> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = parse_assignment(line)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
            map.insert(key, value);
        }
        for raw in overrides {
            let (key, value) = parse_assignment(raw)?;
            map.insert(key, value);
        }
        Self::from_map(map)
    }

    fn from_map(mut map: BTreeMap<String, String>) -> Result<Self> {
        let problem: ProblemId = require(&mut map, "problem")?;
        let estimators = parse_estimators(&require_raw(&mut map, "estimators")?)?;
        let budget_limit: f64 = require(&mut map, "budget_limit")?;
        let reference_rate: f64 = require(&mut map, "reference_rate")?;

        let seeds = match take_raw(&mut map, "seeds") {
            Some(raw) => parse_list::<u64>("seeds", &raw)?,
            None => (0..5).collect(),
        };
        let tuning_frequency = optional(&mut map, "tuning_frequency")?.unwrap_or(5);
        let ema_decay = optional(&mut map, "ema_decay")?.unwrap_or(0.9);
        let eval_every: Option<f64> = optional(&mut map, "eval_every")?;
        let output_dir =
            PathBuf::from(take_raw(&mut map, "output_dir").unwrap_or_else(|| "runs".into()));

        let mut synthetic = SyntheticParams::default();
        if let Some(v) = take_raw(&mut map, "synthetic_kind") {
            synthetic.kind = v;
        }
        set_opt(&mut map, "synthetic_rate", &mut synthetic.rate)?;
        set_opt(&mut map, "synthetic_exponent", &mut synthetic.exponent)?;
        set_opt(&mut map, "synthetic_scale", &mut synthetic.scale)?;
        set_opt(&mut map, "synthetic_horizon", &mut synthetic.horizon)?;
        set_opt(&mut map, "synthetic_dim", &mut synthetic.dim)?;
        if let Some(v) = take_raw(&mut map, "synthetic_cost") {
            synthetic.cost = v;
        }
        set_opt(&mut map, "synthetic_reuse", &mut synthetic.reuse)?;
        set_opt(&mut map, "synthetic_problem_seed", &mut synthetic.problem_seed)?;

        let mut lv = LvParams::default();
        set_opt(&mut map, "lv_dataset_seed", &mut lv.dataset_seed)?;
        set_opt(&mut map, "lv_train_batch", &mut lv.train_batch)?;
        set_opt(&mut map, "lv_eval_batch", &mut lv.eval_batch)?;

        let mut meta = MetaParams::default();
        if let Some(raw) = take_raw(&mut map, "meta_curvatures") {
            meta.curvatures = parse_list("meta_curvatures", &raw)?;
        }
        if let Some(raw) = take_raw(&mut map, "meta_init") {
            meta.init = parse_list("meta_init", &raw)?;
        }
        set_opt(&mut map, "meta_t0", &mut meta.t0)?;
        set_opt(&mut map, "meta_horizon", &mut meta.horizon)?;

        if let Some(key) = map.keys().next() {
            return Err(Error::Config(format!("unknown config key '{key}'")));
        }
        if estimators.is_empty() {
            return Err(Error::Config("'estimators' is empty".into()));
        }
        if seeds.is_empty() {
            return Err(Error::Config("'seeds' is empty".into()));
        }
        Ok(Self {
            problem,
            estimators,
            seeds,
            budget_limit,
            reference_rate,
            tuning_frequency,
            ema_decay,
            eval_every,
            output_dir,
            synthetic,
            lv,
            meta,
        })
    }
}

/// Splits one `key = value` assignment; both sides are trimmed.
pub fn parse_assignment(raw: &str) -> Result<(String, String)> {
    match raw.split_once('=') {
        Some((key, value)) if !key.trim().is_empty() => {
            Ok((key.trim().to_string(), value.trim().to_string()))
        }
        _ => Err(Error::Config(format!(
            "expected 'key = value', got '{raw}'"
        ))),
    }
}

fn take_raw(map: &mut BTreeMap<String, String>, key: &str) -> Option<String> {
    map.remove(key)
}

fn require_raw(map: &mut BTreeMap<String, String>, key: &str) -> Result<String> {
    take_raw(map, key).ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
}

fn require<T>(map: &mut BTreeMap<String, String>, key: &str) -> Result<T>
where
    T: FromStr,
    T::Err: Display,
{
    parse_value(key, &require_raw(map, key)?)
}

fn optional<T>(map: &mut BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T: FromStr,
    T::Err: Display,
{
    take_raw(map, key).map(|raw| parse_value(key, &raw)).transpose()
}

fn set_opt<T>(map: &mut BTreeMap<String, String>, key: &str, slot: &mut T) -> Result<()>
where
    T: FromStr,
    T::Err: Display,
{
    if let Some(value) = optional(map, key)? {
        *slot = value;
    }
    Ok(())
}

fn parse_value<T>(key: &str, raw: &str) -> Result<T>
where
    T: FromStr,
    T::Err: Display,
{
    raw.parse()
        .map_err(|e| Error::Config(format!("invalid value '{raw}' for '{key}': {e}")))
}

fn parse_list<T>(key: &str, raw: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: Display,
{
    raw.split(',')
        .map(|item| parse_value(key, item.trim()))
        .collect()
}

fn parse_estimators(raw: &str) -> Result<Vec<EstimatorChoice>> {
    raw.split(',')
        .map(|item| parse_estimator(item.trim()))
        .collect()
}

/// Parses one estimator name: `untruncated`, `fixed(n)`, `adaptive-ss`,
/// or `adaptive-rr`.
pub fn parse_estimator(raw: &str) -> Result<EstimatorChoice> {
    match raw {
        "untruncated" => Ok(EstimatorChoice::Untruncated),
        "adaptive-ss" => Ok(EstimatorChoice::SingleSample),
        "adaptive-rr" => Ok(EstimatorChoice::RussianRoulette),
        other => {
            if let Some(inner) = other.strip_prefix("fixed(").and_then(|s| s.strip_suffix(')')) {
                let depth = parse_value::<usize>("estimators", inner)?;
                return Ok(EstimatorChoice::FixedTruncation(depth));
            }
            Err(Error::Config(format!(
                "unknown estimator '{other}' (expected untruncated, fixed(n), adaptive-ss, or adaptive-rr)"
            )))
        }
    }
}
