use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::problems::{rk4_solve, Dual, GradientSequence, Scalar};
use crate::rng::{self, tag};
use crate::telescope::CostModel;

// Data-generating box for λ = (u₁(0), u₂(0), A, B, C, D); the prior is the
// diagonal Gaussian with this uniform's mean and standard deviation.
const PARAM_LOW: [f64; 6] = [1.0, 0.4, 0.8, 0.4, 1.5, 0.4];
const PARAM_HIGH: [f64; 6] = [1.5, 0.6, 1.2, 0.6, 2.0, 0.6];

const OBS_TIMES: [f64; 5] = [0.0, 1.25, 2.5, 3.75, 5.0];
const OBS_STD: f64 = 0.1;
const TIME_SPAN: f64 = 5.0;
const GROUND_TRUTH_POINTS: usize = 10_000;

// Depth i solves the ODE on 2^i + 1 grid points.
const HORIZON: usize = 8;

// Log-likelihood assigned to a sample whose trajectory blew up; keeps the
// objective finite while making divergent parameters maximally unattractive.
// Such samples contribute zero gradient.
const BLOW_UP_PENALTY: f64 = -1e8;

/// Predator-prey vector field `(A·u₁ − B·u₁u₂, C·u₁u₂ − D·u₂)`. The first
/// two entries of `params` are initial conditions and don't enter the field.
pub fn lv_rhs<S: Scalar>(u: &[S; 2], params: &[S; 6]) -> [S; 2] {
    let coupling = u[0] * u[1];
    [
        params[2] * u[0] - params[3] * coupling,
        params[4] * coupling - params[5] * u[1],
    ]
}

fn solve_path<S: Scalar>(params: [S; 6], points: usize) -> Result<Vec<[S; 2]>> {
    rk4_solve(
        move |u| lv_rhs(u, &params),
        [params[0], params[1]],
        0.0,
        TIME_SPAN,
        points,
    )
}

// Linear interpolation between the two bracketing grid points; the weights
// are plain constants (the grid does not depend on parameters) but the grid
// states carry whatever tangents they have.
fn interpolate<S: Scalar>(path: &[[S; 2]], t: f64) -> [S; 2] {
    let h = TIME_SPAN / (path.len() - 1) as f64;
    let pos = t / h;
    let k = (pos.floor() as usize).min(path.len() - 2);
    let w = pos - k as f64;
    [
        path[k][0].scale(1.0 - w) + path[k + 1][0].scale(w),
        path[k][1].scale(1.0 - w) + path[k + 1][1].scale(w),
    ]
}

fn noise(noise_seed: u64, sample: usize) -> [f64; 6] {
    let mut rng = rng::stream(noise_seed, tag::BATCH, sample as u64);
    std::array::from_fn(|_| StandardNormal.sample(&mut rng))
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn softplus_inv(y: f64) -> f64 {
    y.exp_m1().ln()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One synthetic predator-prey inference task: hidden true parameters drawn
/// from the data-generating box, and five noisy observations of both
/// populations taken from a finely solved trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct LvDataset {
    pub seed: u64,
    pub true_params: [f64; 6],
    pub times: [f64; 5],
    pub observations: [[f64; 2]; 5],
}

impl LvDataset {
    pub fn generate(seed: u64) -> Result<Self> {
        let mut rng = rng::stream(seed, tag::DATASET, 0);
        let mut true_params = [0.0; 6];
        for j in 0..6 {
            true_params[j] = rng.random_range(PARAM_LOW[j]..PARAM_HIGH[j]);
        }
        let path = solve_path(true_params, GROUND_TRUTH_POINTS)?;
        let mut observations = [[0.0; 2]; 5];
        for (k, &t) in OBS_TIMES.iter().enumerate() {
            let u = interpolate(&path, t);
            for c in 0..2 {
                let eps: f64 = StandardNormal.sample(&mut rng);
                observations[k][c] = u[c] + OBS_STD * eps;
            }
        }
        Ok(Self {
            seed,
            true_params,
            times: OBS_TIMES,
            observations,
        })
    }

    /// Flat key-value record of everything needed to reproduce the task,
    /// with float values at full (17 significant digit) precision.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("seed = {}\n", self.seed));
        let names = ["u1_0", "u2_0", "a", "b", "c", "d"];
        for (name, v) in names.iter().zip(self.true_params) {
            out.push_str(&format!("true_{name} = {v:.16e}\n"));
        }
        for k in 0..5 {
            out.push_str(&format!("obs_time_{} = {:.16e}\n", k + 1, self.times[k]));
            out.push_str(&format!("obs_u1_{} = {:.16e}\n", k + 1, self.observations[k][0]));
            out.push_str(&format!("obs_u2_{} = {:.16e}\n", k + 1, self.observations[k][1]));
        }
        out
    }
}

// Softplus link evaluated at one θ = (μ̃, σ̃): the positive means and
// standard deviations plus the link derivatives needed for the chain rule.
struct Link {
    mu: [f64; 6],
    sigma: [f64; 6],
    dmu: [f64; 6],
    dsigma: [f64; 6],
}

/// Variational inference for the predator-prey parameters: minimize the
/// negative evidence lower bound over a diagonal Gaussian family with
/// softplus-linked parameters `θ = (μ̃, σ̃) ∈ ℝ¹²` and reflected samples
/// `λ = |μ + σ·ε|`.
///
/// Depth `i` scores samples against an RK4 solve on `2^i + 1` grid points
/// (linearly interpolated to the observation times), so the gradient
/// sequence converges at the solver's rate while cheap depths cost only a
/// handful of steps. Solves at different depths share no work, so the cost
/// model charges every evaluated depth separately.
///
/// Gradients are averaged over a reparameterized sample batch, with the
/// noise derived only from the step's seed and the sample index — never the
/// depth — so that all depths see common random numbers and pathwise
/// differences shrink as the solver converges.
#[derive(Debug, Clone)]
pub struct LotkaVolterraVi {
    dataset: LvDataset,
    prior_mean: [f64; 6],
    prior_std: [f64; 6],
    train_batch: usize,
    eval_batch: usize,
    costs: CostModel,
}

impl LotkaVolterraVi {
    pub fn new(dataset: LvDataset) -> Self {
        Self::with_batches(dataset, 64, 512).expect("default batch sizes are valid")
    }

    /// `train_batch` samples per gradient, `eval_batch` per loss evaluation.
    pub fn with_batches(dataset: LvDataset, train_batch: usize, eval_batch: usize) -> Result<Self> {
        if train_batch == 0 || eval_batch == 0 {
            return Err(Error::InvalidParameter(
                "batch sizes must be at least 1".into(),
            ));
        }
        let mut prior_mean = [0.0; 6];
        let mut prior_std = [0.0; 6];
        for j in 0..6 {
            prior_mean[j] = 0.5 * (PARAM_LOW[j] + PARAM_HIGH[j]);
            prior_std[j] = (PARAM_HIGH[j] - PARAM_LOW[j]) / 12f64.sqrt();
        }
        let costs = CostModel::new(
            (1..=HORIZON).map(|i| ((1usize << i) + 1) as f64).collect(),
            false,
        )?;
        Ok(Self {
            dataset,
            prior_mean,
            prior_std,
            train_batch,
            eval_batch,
            costs,
        })
    }

    pub fn dataset(&self) -> &LvDataset {
        &self.dataset
    }

    fn grid_points(depth: usize) -> usize {
        (1 << depth) + 1
    }

    fn check_depth(&self, depth: usize) -> Result<()> {
        if depth == 0 || depth > HORIZON {
            return Err(Error::InvalidParameter(format!(
                "depth {depth} outside 1..={HORIZON}"
            )));
        }
        Ok(())
    }

    fn link(&self, theta: &[f64]) -> Result<Link> {
        if theta.len() != 12 {
            return Err(Error::ShapeMismatch(format!(
                "variational parameters are 12-dimensional, got {}",
                theta.len()
            )));
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "variational parameters must be finite".into(),
            ));
        }
        let mut link = Link {
            mu: [0.0; 6],
            sigma: [0.0; 6],
            dmu: [0.0; 6],
            dsigma: [0.0; 6],
        };
        for j in 0..6 {
            link.mu[j] = softplus(theta[j]);
            link.dmu[j] = sigmoid(theta[j]);
            link.sigma[j] = softplus(theta[6 + j]);
            link.dsigma[j] = sigmoid(theta[6 + j]);
        }
        Ok(link)
    }

    // Closed-form KL between the diagonal Gaussians q = N(μ, σ²) and the
    // prior, with its gradient already chained through the softplus link.
    fn kl(&self, link: &Link) -> (f64, [f64; 12]) {
        let mut value = 0.0;
        let mut grad = [0.0; 12];
        for j in 0..6 {
            let (m, s) = (self.prior_mean[j], self.prior_std[j]);
            let (mu, sigma) = (link.mu[j], link.sigma[j]);
            value += (s / sigma).ln() + (sigma * sigma + (mu - m) * (mu - m)) / (2.0 * s * s) - 0.5;
            grad[j] = (mu - m) / (s * s) * link.dmu[j];
            grad[6 + j] = (sigma / (s * s) - 1.0 / sigma) * link.dsigma[j];
        }
        (value, grad)
    }

    fn log_likelihood<S: Scalar>(&self, path: &[[S; 2]]) -> S {
        let norm_const = -(OBS_STD * std::f64::consts::TAU.sqrt()).ln();
        let mut total = S::constant(10.0 * norm_const);
        for (k, &t) in self.dataset.times.iter().enumerate() {
            let u = interpolate(path, t);
            for c in 0..2 {
                let r = u[c] - S::constant(self.dataset.observations[k][c]);
                total = total - (r * r).scale(0.5 / (OBS_STD * OBS_STD));
            }
        }
        total
    }
}

impl GradientSequence for LotkaVolterraVi {
    fn horizon(&self) -> usize {
        HORIZON
    }

    fn dim(&self) -> usize {
        12
    }

    fn cost_model(&self) -> &CostModel {
        &self.costs
    }

    /// Deterministic start: variational means at the prior mean, standard
    /// deviations at 0.1, both pulled back through the softplus link.
    fn initial_point(&self, _seed: u64) -> Vec<f64> {
        let mut theta = Vec::with_capacity(12);
        for j in 0..6 {
            theta.push(softplus_inv(self.prior_mean[j]));
        }
        for _ in 0..6 {
            theta.push(softplus_inv(0.1));
        }
        theta
    }

    fn gradient(&self, theta: &[f64], depth: usize, noise_seed: u64) -> Result<Vec<f64>> {
        self.check_depth(depth)?;
        let link = self.link(theta)?;
        let (_, kl_grad) = self.kl(&link);
        let points = Self::grid_points(depth);
        let mut acc = [0.0; 12];
        for b in 0..self.train_batch {
            let eps = noise(noise_seed, b);
            let mut lam = [Dual::<6>::constant(0.0); 6];
            let mut sign = [1.0; 6];
            for j in 0..6 {
                let z = link.mu[j] + link.sigma[j] * eps[j];
                sign[j] = if z < 0.0 { -1.0 } else { 1.0 };
                lam[j] = Dual::variable(z * sign[j], j);
            }
            match solve_path(lam, points) {
                Ok(path) => {
                    let ll = self.log_likelihood(&path);
                    for j in 0..6 {
                        // ∂λⱼ/∂μ̃ⱼ = sign·softplus′(μ̃ⱼ) and
                        // ∂λⱼ/∂σ̃ⱼ = sign·εⱼ·softplus′(σ̃ⱼ).
                        acc[j] += ll.tan[j] * sign[j] * link.dmu[j];
                        acc[6 + j] += ll.tan[j] * sign[j] * eps[j] * link.dsigma[j];
                    }
                }
                Err(Error::OdeBlowUp { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let scale = 1.0 / self.train_batch as f64;
        Ok((0..12).map(|j| kl_grad[j] - scale * acc[j]).collect())
    }

    fn loss(&self, theta: &[f64], depth: usize, noise_seed: u64) -> Result<f64> {
        self.check_depth(depth)?;
        let link = self.link(theta)?;
        let (kl, _) = self.kl(&link);
        let points = Self::grid_points(depth);
        let mut total = 0.0;
        for b in 0..self.eval_batch {
            let eps = noise(noise_seed, b);
            let mut lam = [0.0; 6];
            for j in 0..6 {
                lam[j] = (link.mu[j] + link.sigma[j] * eps[j]).abs();
            }
            total += match solve_path(lam, points) {
                Ok(path) => self.log_likelihood(&path),
                Err(Error::OdeBlowUp { .. }) => BLOW_UP_PENALTY,
                Err(e) => return Err(e),
            };
        }
        Ok(kl - total / self.eval_batch as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l2(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn rhs_equilibrium_and_decoupling() {
        let ones = [1.0; 6];
        assert_eq!(lv_rhs(&[1.0, 1.0], &ones), [0.0, 0.0]);

        // Without predators the prey grows at rate A.
        let out = lv_rhs(&[2.0, 0.0], &[1.0, 1.0, 1.3, 1.0, 1.0, 1.0]);
        assert_eq!(out, [2.6, 0.0]);

        // B = C = 0 uncouples the populations.
        let out = lv_rhs(&[2.0, 3.0], &[1.0, 1.0, 1.5, 0.0, 0.0, 0.5]);
        assert_eq!(out, [3.0, -1.5]);
    }

    #[test]
    fn ground_truth_grid_is_converged() {
        let mean: [f64; 6] = std::array::from_fn(|j| 0.5 * (PARAM_LOW[j] + PARAM_HIGH[j]));
        let coarse = solve_path(mean, GROUND_TRUTH_POINTS).unwrap();
        let fine = solve_path(mean, 2 * GROUND_TRUTH_POINTS).unwrap();
        for c in 0..2 {
            let a = coarse.last().unwrap()[c];
            let b = fine.last().unwrap()[c];
            assert!(((a - b) / b).abs() < 1e-6, "component {c}: {a} vs {b}");
        }
    }

    #[test]
    fn trajectory_sensitivities_match_finite_differences() {
        let lam = [1.2, 0.5, 1.0, 0.5, 1.7, 0.5];
        let points = 129;
        let dual: [Dual<6>; 6] = std::array::from_fn(|j| Dual::variable(lam[j], j));
        let end = *solve_path(dual, points).unwrap().last().unwrap();

        let h = 1e-5;
        for j in 0..6 {
            let mut plus = lam;
            plus[j] += h;
            let mut minus = lam;
            minus[j] -= h;
            let up = *solve_path(plus, points).unwrap().last().unwrap();
            let down = *solve_path(minus, points).unwrap().last().unwrap();
            for c in 0..2 {
                let fd = (up[c] - down[c]) / (2.0 * h);
                assert!(
                    (end[c].tan[j] - fd).abs() < 1e-5 * fd.abs().max(1e-3),
                    "param {j} component {c}: {} vs {fd}",
                    end[c].tan[j]
                );
            }
        }
    }

    #[test]
    fn kl_vanishes_when_the_variational_family_sits_on_the_prior() {
        let problem = LotkaVolterraVi::new(LvDataset::generate(0).unwrap());
        let mut theta = Vec::new();
        for j in 0..6 {
            theta.push(softplus_inv(problem.prior_mean[j]));
        }
        for j in 0..6 {
            theta.push(softplus_inv(problem.prior_std[j]));
        }
        let link = problem.link(&theta).unwrap();
        let (value, grad) = problem.kl(&link);
        assert!(value.abs() < 1e-12, "KL = {value}");
        assert!(grad.iter().all(|g| g.abs() < 1e-10));
    }

    #[test]
    fn elbo_gradient_matches_finite_differences() {
        // Common random numbers: train and eval batches are the same four
        // samples, so the loss is exactly the function the gradient
        // differentiates.
        let problem =
            LotkaVolterraVi::with_batches(LvDataset::generate(3).unwrap(), 4, 4).unwrap();
        let mut theta = problem.initial_point(0);
        for (j, t) in theta.iter_mut().enumerate() {
            *t += 0.05 * (j as f64 - 5.5) / 5.5;
        }
        let depth = 4;
        let noise_seed = 11;
        let grad = problem.gradient(&theta, depth, noise_seed).unwrap();
        let h = 1e-5;
        for j in 0..12 {
            let mut plus = theta.clone();
            plus[j] += h;
            let mut minus = theta.clone();
            minus[j] -= h;
            let fd = (problem.loss(&plus, depth, noise_seed).unwrap()
                - problem.loss(&minus, depth, noise_seed).unwrap())
                / (2.0 * h);
            assert!(
                (grad[j] - fd).abs() < 1e-4 * fd.abs().max(1e-6),
                "coordinate {j}: {} vs {fd}",
                grad[j]
            );
        }
    }

    #[test]
    fn gradient_differences_shrink_as_the_solver_converges() {
        let problem =
            LotkaVolterraVi::with_batches(LvDataset::generate(1).unwrap(), 8, 8).unwrap();
        let theta = problem.initial_point(0);
        let grads: Vec<Vec<f64>> = (1..=HORIZON)
            .map(|i| problem.gradient(&theta, i, 7).unwrap())
            .collect();
        let norms: Vec<f64> = grads
            .windows(2)
            .map(|w| l2(&w[0].iter().zip(&w[1]).map(|(a, b)| a - b).collect::<Vec<_>>()))
            .collect();
        for pair in norms[1..].windows(2) {
            assert!(pair[1] < pair[0], "difference norms not shrinking: {norms:?}");
        }
        assert!(norms[HORIZON - 2] < 1e-3 * norms[1], "{norms:?}");
    }

    #[test]
    fn blown_up_samples_are_clamped_with_zero_gradient() {
        let problem =
            LotkaVolterraVi::with_batches(LvDataset::generate(0).unwrap(), 4, 4).unwrap();
        // μ ≈ 50 makes the prey rate A ≈ 50, so every sample's trajectory
        // explodes; the loss falls back to the clamp and the gradient to the
        // KL term alone.
        let mut theta = vec![50.0; 6];
        theta.extend(problem.initial_point(0)[6..].iter());
        let loss = problem.loss(&theta, 4, 5).unwrap();
        assert!(loss > 0.9e8);
        assert!(loss.is_finite());

        let grad = problem.gradient(&theta, 4, 5).unwrap();
        let link = problem.link(&theta).unwrap();
        let (_, kl_grad) = problem.kl(&link);
        assert_eq!(grad, kl_grad.to_vec());
    }

    #[test]
    fn dataset_is_reproducible_and_exports_full_precision() {
        let a = LvDataset::generate(42).unwrap();
        let b = LvDataset::generate(42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, LvDataset::generate(43).unwrap());

        for j in 0..6 {
            assert!(a.true_params[j] >= PARAM_LOW[j] && a.true_params[j] < PARAM_HIGH[j]);
        }
        assert_eq!(a.times, [0.0, 1.25, 2.5, 3.75, 5.0]);

        let text = a.to_text();
        assert_eq!(text, b.to_text());
        assert!(text.starts_with("seed = 42\n"));
        assert!(text.contains("true_u1_0 = "));
        assert!(text.contains("obs_u2_5 = "));
        // 16 digits after the point in scientific notation = 17 significant.
        let line = text.lines().find(|l| l.starts_with("true_a")).unwrap();
        let mantissa = line.split(" = ").nth(1).unwrap().split('e').next().unwrap();
        assert_eq!(mantissa.split('.').nth(1).unwrap().len(), 16);
    }

    #[test]
    fn costs_shape_and_initialization() {
        let problem = LotkaVolterraVi::new(LvDataset::generate(9).unwrap());
        assert_eq!(problem.horizon(), 8);
        assert_eq!(problem.dim(), 12);
        let costs = problem.cost_model();
        assert!(!costs.reuse());
        assert_eq!(costs.cost(1), 3.0);
        assert_eq!(costs.cost(8), 257.0);

        let theta = problem.initial_point(0);
        let link = problem.link(&theta).unwrap();
        for j in 0..6 {
            assert!((link.mu[j] - problem.prior_mean[j]).abs() < 1e-12);
            assert!((link.sigma[j] - 0.1).abs() < 1e-12);
        }
        assert!(LotkaVolterraVi::with_batches(LvDataset::generate(0).unwrap(), 0, 4).is_err());
    }

    #[test]
    fn argument_validation() {
        let problem = LotkaVolterraVi::new(LvDataset::generate(0).unwrap());
        let theta = problem.initial_point(0);
        assert!(problem.gradient(&theta, 0, 0).is_err());
        assert!(problem.gradient(&theta, 9, 0).is_err());
        assert!(problem.gradient(&theta[..5], 1, 0).is_err());
        let mut bad = theta.clone();
        bad[3] = f64::NAN;
        assert!(problem.loss(&bad, 1, 0).is_err());
    }
}
