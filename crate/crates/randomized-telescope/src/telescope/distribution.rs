use rand::Rng;

use super::PROBABILITY_SUM_TOLERANCE;
use crate::{Error, Result};

/// Probability vector over truncation depths `1..=H`.
///
/// Indices are 1-based everywhere in this crate: `prob(1)` is the chance of
/// truncating after the first term.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationDistribution {
    probs: Vec<f64>,
    // tails[n-1] = Pr(N >= n), precomputed right-to-left.
    tails: Vec<f64>,
}

impl TruncationDistribution {
    /// Wrap an explicit probability vector. Entries must be nonnegative,
    /// finite, and sum to 1 within 1e-12.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "entry {} is {p}, want a nonnegative finite value",
                    i + 1
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}, not 1"
            )));
        }
        let mut tails = vec![0.0; probs.len()];
        let mut acc = 0.0;
        for i in (0..probs.len()).rev() {
            acc += probs[i];
            tails[i] = acc;
        }
        Ok(Self { probs, tails })
    }

    /// Normalize arbitrary nonnegative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "weight {} is {w}, want a nonnegative finite value",
                    i + 1
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidDistribution(
                "weights sum to zero, nothing to normalize".into(),
            ));
        }
        // Normalize and absorb the rounding slack into the largest entry so
        // the sum is exactly 1 regardless of the weights' magnitudes.
        let mut probs: Vec<f64> = weights.iter().map(|w| w / sum).collect();
        let psum: f64 = probs.iter().sum();
        let imax = (0..probs.len())
            .max_by(|&a, &b| probs[a].total_cmp(&probs[b]))
            .unwrap();
        probs[imax] += 1.0 - psum;
        Self::new(probs)
    }

    /// `q(n) ∝ decay^n`, the schedule matched to geometrically shrinking
    /// telescope terms.
    pub fn geometric(decay: f64, horizon: usize) -> Result<Self> {
        if !(decay > 0.0 && decay.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "geometric decay must be a positive finite value, got {decay}"
            )));
        }
        let weights: Vec<f64> = (1..=horizon).map(|n| decay.powi(n as i32)).collect();
        Self::from_weights(&weights)
    }

    /// `q(n) ∝ n^{-exponent}`, the schedule matched to polynomially
    /// shrinking telescope terms.
    pub fn polynomial(exponent: f64, horizon: usize) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "polynomial exponent must be a positive finite value, got {exponent}"
            )));
        }
        let weights: Vec<f64> = (1..=horizon).map(|n| (n as f64).powf(-exponent)).collect();
        Self::from_weights(&weights)
    }

    pub fn horizon(&self) -> usize {
        self.probs.len()
    }

    /// `q(n)`, 1-based.
    pub fn prob(&self, n: usize) -> f64 {
        self.probs[n - 1]
    }

    /// `Pr(N >= n)`, 1-based.
    pub fn tail(&self, n: usize) -> f64 {
        self.tails[n - 1]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Draw a truncation depth by inverse CDF. The comparison is strict and
    /// the cumulative sum runs left to right, so a zero-probability entry can
    /// never be drawn and the stream is reproducible across platforms.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i + 1;
            }
        }
        // Rounding can leave acc a hair under 1; charge the last entry.
        self.probs.len()
    }
}
