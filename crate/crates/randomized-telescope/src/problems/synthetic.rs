use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::problems::GradientSequence;
use crate::rng::{self, tag};
use crate::telescope::{CostModel, TruncationDistribution};

/// How fast the gradient sequence converges: the difference norms are
/// exactly `ψ(n) = scale · n^{−exponent}` or `ψ(n) = scale · rateⁿ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayKind {
    Polynomial { exponent: f64, scale: f64 },
    Geometric { rate: f64, scale: f64 },
}

impl DecayKind {
    fn validate(&self) -> Result<()> {
        match *self {
            DecayKind::Polynomial { exponent, scale } => {
                if !(exponent > 0.0 && exponent.is_finite()) {
                    return Err(Error::NonPositive("polynomial decay exponent", exponent));
                }
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::NonPositive("decay scale", scale));
                }
            }
            DecayKind::Geometric { rate, scale } => {
                if !(rate > 0.0 && rate < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "geometric decay rate must lie in (0, 1), got {rate}"
                    )));
                }
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::NonPositive("decay scale", scale));
                }
            }
        }
        Ok(())
    }

    /// The difference norm `ψ(n)`.
    pub fn psi(&self, n: usize) -> f64 {
        match *self {
            DecayKind::Polynomial { exponent, scale } => scale * (n as f64).powf(-exponent),
            DecayKind::Geometric { rate, scale } => scale * rate.powi(n as i32),
        }
    }

    /// Guarantees for the single-sample estimator under [`matched_q`]
    /// sampling: `(expected compute, expected squared norm)` upper bounds,
    /// in units of `C(n) = n` for polynomial decay and `C(n) = n` with the
    /// geometric sum absorbed for geometric decay.
    ///
    /// Polynomial decay with exponent `p` gives `(𝓗², c²·𝓗²)` where `𝓗` is
    /// the generalized harmonic number `Σ n^{−(p−1/2)}` up to the horizon;
    /// it stays bounded as the horizon grows only for `p > 3/2`. Geometric
    /// decay with rate `p` gives `((1−p)⁻², c²·(1−p)⁻²)` at any horizon.
    ///
    /// [`matched_q`]: DecayKind::matched_q
    pub fn bounds(&self, horizon: usize) -> Result<(f64, f64)> {
        self.validate()?;
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        Ok(match *self {
            DecayKind::Polynomial { exponent, scale } => {
                let order = exponent - 0.5;
                let harmonic: f64 = (1..=horizon).map(|n| (n as f64).powf(-order)).sum();
                (harmonic * harmonic, scale * scale * harmonic * harmonic)
            }
            DecayKind::Geometric { rate, scale } => {
                let b = 1.0 / ((1.0 - rate) * (1.0 - rate));
                (b, scale * scale * b)
            }
        })
    }

    /// The truncation distribution those bounds assume: `q(n) ∝ n^{−(p+1/2)}`
    /// for polynomial decay, `q(n) ∝ rateⁿ` for geometric.
    pub fn matched_q(&self, horizon: usize) -> Result<TruncationDistribution> {
        self.validate()?;
        match *self {
            DecayKind::Polynomial { exponent, .. } => {
                TruncationDistribution::polynomial(exponent + 0.5, horizon)
            }
            DecayKind::Geometric { rate, .. } => TruncationDistribution::geometric(rate, horizon),
        }
    }
}

fn is_positive_definite(m: &[Vec<f64>]) -> bool {
    // Cholesky succeeds exactly on (numerically) positive-definite input.
    let d = m.len();
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

/// Quadratic objective whose gradient sequence converges at an exactly known
/// rate: `Gᵢ(θ) = A(θ − θ*) − Σ_{m>i} ψ(m)·uₘ` for seeded unit directions
/// `uₘ`, so consecutive differences have `‖Δᵢ‖ = ψ(i)` to machine precision
/// and the full-depth gradient is the plain quadratic's.
///
/// This is the calibration target for everything in [`tuning`](crate::tuning)
/// and the estimator guarantees in [`DecayKind::bounds`]: every quantity the
/// estimators are supposed to control is available in closed form.
#[derive(Debug, Clone)]
pub struct SyntheticDecayProblem {
    kind: DecayKind,
    curvature: Vec<Vec<f64>>,
    theta_star: Vec<f64>,
    // tails[i] = Σ_{m>i} ψ(m)·uₘ; tails[horizon] is the zero vector.
    tails: Vec<Vec<f64>>,
    costs: CostModel,
    horizon: usize,
}

impl SyntheticDecayProblem {
    /// `curvature` must be symmetric positive-definite with one row per
    /// entry of `theta_star`; `costs` must cover exactly the horizon. The
    /// seed fixes the hidden unit directions.
    pub fn new(
        kind: DecayKind,
        curvature: Vec<Vec<f64>>,
        theta_star: Vec<f64>,
        horizon: usize,
        seed: u64,
        costs: CostModel,
    ) -> Result<Self> {
        kind.validate()?;
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        let d = theta_star.len();
        if d == 0 {
            return Err(Error::InvalidParameter(
                "parameter dimension must be at least 1".into(),
            ));
        }
        if curvature.len() != d || curvature.iter().any(|row| row.len() != d) {
            return Err(Error::ShapeMismatch(format!(
                "curvature must be {d}×{d} to match the target point"
            )));
        }
        for i in 0..d {
            for j in 0..d {
                if !curvature[i][j].is_finite() || curvature[i][j] != curvature[j][i] {
                    return Err(Error::InvalidParameter(
                        "curvature must be finite and symmetric".into(),
                    ));
                }
            }
        }
        if !is_positive_definite(&curvature) {
            return Err(Error::InvalidParameter(
                "curvature must be positive-definite".into(),
            ));
        }
        if costs.horizon() != horizon {
            return Err(Error::ShapeMismatch(format!(
                "cost model covers {} depths, problem has {horizon}",
                costs.horizon()
            )));
        }

        let mut directions = Vec::with_capacity(horizon);
        for n in 1..=horizon {
            let mut rng = rng::stream(seed, tag::DIRECTIONS, n as u64);
            let mut u: Vec<f64> = (0..d)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in &mut u {
                *x /= norm;
            }
            directions.push(u);
        }
        // Suffix sums, accumulated from the far end so tails[horizon] = 0.
        let mut tails = vec![vec![0.0; d]; horizon + 1];
        for i in (0..horizon).rev() {
            let psi = kind.psi(i + 1);
            for j in 0..d {
                tails[i][j] = tails[i + 1][j] + psi * directions[i][j];
            }
        }
        Ok(Self {
            kind,
            curvature,
            theta_star,
            tails,
            costs,
            horizon,
        })
    }

    pub fn kind(&self) -> DecayKind {
        self.kind
    }

    fn quadratic_grad(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.theta_star.len();
        let mut g = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                g[i] += self.curvature[i][j] * (theta[j] - self.theta_star[j]);
            }
        }
        g
    }

    fn check_args(&self, theta: &[f64], depth: usize) -> Result<()> {
        if theta.len() != self.theta_star.len() {
            return Err(Error::ShapeMismatch(format!(
                "theta has dimension {}, problem has {}",
                theta.len(),
                self.theta_star.len()
            )));
        }
        if depth == 0 || depth > self.horizon {
            return Err(Error::InvalidParameter(format!(
                "depth {depth} outside 1..={}",
                self.horizon
            )));
        }
        Ok(())
    }
}

impl GradientSequence for SyntheticDecayProblem {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn dim(&self) -> usize {
        self.theta_star.len()
    }

    fn cost_model(&self) -> &CostModel {
        &self.costs
    }

    fn initial_point(&self, seed: u64) -> Vec<f64> {
        let mut rng = rng::stream(seed, tag::INIT, 0);
        self.theta_star
            .iter()
            .map(|t| {
                let offset: f64 = StandardNormal.sample(&mut rng);
                t + offset
            })
            .collect()
    }

    fn gradient(&self, theta: &[f64], depth: usize, _noise_seed: u64) -> Result<Vec<f64>> {
        self.check_args(theta, depth)?;
        let mut g = self.quadratic_grad(theta);
        for (gi, t) in g.iter_mut().zip(&self.tails[depth]) {
            *gi -= t;
        }
        Ok(g)
    }

    fn loss(&self, theta: &[f64], depth: usize, _noise_seed: u64) -> Result<f64> {
        self.check_args(theta, depth)?;
        let g = self.quadratic_grad(theta);
        let quad: f64 = g
            .iter()
            .zip(theta.iter().zip(&self.theta_star))
            .map(|(gi, (t, s))| 0.5 * gi * (t - s))
            .sum();
        let linear: f64 = self.tails[depth].iter().zip(theta).map(|(t, x)| t * x).sum();
        Ok(quad - linear)
    }
}
