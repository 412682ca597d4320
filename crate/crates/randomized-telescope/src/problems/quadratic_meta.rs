use rand::Rng;

use crate::error::{Error, Result};
use crate::problems::{Dual, GradientSequence, Scalar};
use crate::rng::{self, tag};
use crate::telescope::CostModel;

// Depth i unrolls 2^i + 1 inner steps; past 30 the shift overflows and the
// unroll would be absurdly long anyway.
const MAX_HORIZON: usize = 30;

/// Meta-optimization toy: tune a learning-rate schedule for gradient descent
/// on a diagonal quadratic by differentiating through the unrolled loop.
///
/// The meta-parameters are `θ = [η₀, λ]` for the schedule
/// `η_t = η₀·(1 + t/t₀)^{−λ}`. The inner iterate on coordinate `j` contracts
/// as `x_{t+1} = x_t·(1 − η_t·aⱼ)`, so depth `i` — the loss after `2^i + 1`
/// inner steps, with shallower depths reusing the same unroll — has a closed
/// form against which the dual-number meta-gradient can be checked exactly.
#[derive(Debug, Clone)]
pub struct QuadraticMetaProblem {
    curvatures: Vec<f64>,
    init: Vec<f64>,
    t0: f64,
    a_max: f64,
    costs: CostModel,
    horizon: usize,
}

impl QuadraticMetaProblem {
    /// `curvatures` are the (positive) diagonal entries of the inner
    /// quadratic, `init` the inner starting iterate, `t0` the schedule's
    /// time scale.
    pub fn new(curvatures: Vec<f64>, init: Vec<f64>, t0: f64, horizon: usize) -> Result<Self> {
        if curvatures.is_empty() {
            return Err(Error::InvalidParameter(
                "inner quadratic needs at least one coordinate".into(),
            ));
        }
        if init.len() != curvatures.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} curvatures but {} initial coordinates",
                curvatures.len(),
                init.len()
            )));
        }
        for &a in &curvatures {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::NonPositive("inner curvature", a));
            }
        }
        if init.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "inner initial iterate must be finite".into(),
            ));
        }
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::NonPositive("schedule time scale", t0));
        }
        if horizon == 0 || horizon > MAX_HORIZON {
            return Err(Error::InvalidParameter(format!(
                "horizon must lie in 1..={MAX_HORIZON}, got {horizon}"
            )));
        }
        let a_max = curvatures.iter().cloned().fold(f64::MIN, f64::max);
        let costs = CostModel::new(
            (1..=horizon).map(|i| ((1usize << i) + 1) as f64).collect(),
            true,
        )?;
        Ok(Self {
            curvatures,
            init,
            t0,
            a_max,
            costs,
            horizon,
        })
    }

    fn inner_steps(&self, depth: usize) -> usize {
        (1 << depth) + 1
    }

    fn check_args(&self, theta: &[f64], depth: usize) -> Result<()> {
        if theta.len() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "meta-parameters are [η₀, λ], got dimension {}",
                theta.len()
            )));
        }
        if !(theta[0] > 0.0 && theta[0].is_finite()) {
            return Err(Error::NonPositive("inner learning rate", theta[0]));
        }
        if !theta[1].is_finite() {
            return Err(Error::InvalidParameter(
                "schedule decay exponent must be finite".into(),
            ));
        }
        if depth == 0 || depth > self.horizon {
            return Err(Error::InvalidParameter(format!(
                "depth {depth} outside 1..={}",
                self.horizon
            )));
        }
        Ok(())
    }

    // The dual value channel repeats these exact operations, so loss() and
    // gradient() agree bitwise on the loss value.
    fn unroll_value(&self, eta0: f64, lambda: f64, steps: usize) -> Result<f64> {
        let bound = 2.0 / self.a_max;
        let mut x = self.init.clone();
        for t in 0..steps {
            let k_t = (1.0 + t as f64 / self.t0).ln();
            let eta_t = eta0 * (-lambda * k_t).exp();
            if eta_t >= bound {
                return Err(Error::InnerDivergence { rate: eta_t, bound });
            }
            for (xj, &a) in x.iter_mut().zip(&self.curvatures) {
                *xj *= 1.0 - eta_t * a;
            }
        }
        Ok(x.iter()
            .zip(&self.curvatures)
            .map(|(xj, &a)| 0.5 * a * xj * xj)
            .sum())
    }

    fn unroll_dual(&self, eta0: f64, lambda: f64, steps: usize) -> Result<(f64, [f64; 2])> {
        let bound = 2.0 / self.a_max;
        let eta0 = Dual::<2>::variable(eta0, 0);
        let lambda = Dual::<2>::variable(lambda, 1);
        let one = Dual::<2>::constant(1.0);
        let mut x: Vec<Dual<2>> = self.init.iter().map(|&d| Dual::constant(d)).collect();
        for t in 0..steps {
            let k_t = (1.0 + t as f64 / self.t0).ln();
            let eta_t = eta0 * (-lambda.scale(k_t)).exp();
            if eta_t.val >= bound {
                return Err(Error::InnerDivergence {
                    rate: eta_t.val,
                    bound,
                });
            }
            for (xj, &a) in x.iter_mut().zip(&self.curvatures) {
                *xj = *xj * (one - eta_t.scale(a));
            }
        }
        let mut loss = Dual::<2>::constant(0.0);
        for (xj, &a) in x.iter().zip(&self.curvatures) {
            loss = loss + (*xj * *xj).scale(0.5 * a);
        }
        Ok((loss.val, loss.tan))
    }
}

impl GradientSequence for QuadraticMetaProblem {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn dim(&self) -> usize {
        2
    }

    fn cost_model(&self) -> &CostModel {
        &self.costs
    }

    fn initial_point(&self, seed: u64) -> Vec<f64> {
        // Start well inside the stability region: η₀·a_max < 1.
        let mut rng = rng::stream(seed, tag::INIT, 0);
        let eta0 = rng.random_range(0.2..1.0) / self.a_max;
        let lambda = rng.random_range(0.0..0.5);
        vec![eta0, lambda]
    }

    fn gradient(&self, theta: &[f64], depth: usize, _noise_seed: u64) -> Result<Vec<f64>> {
        self.check_args(theta, depth)?;
        let (_, tan) = self.unroll_dual(theta[0], theta[1], self.inner_steps(depth))?;
        Ok(tan.to_vec())
    }

    fn loss(&self, theta: &[f64], depth: usize, _noise_seed: u64) -> Result<f64> {
        self.check_args(theta, depth)?;
        self.unroll_value(theta[0], theta[1], self.inner_steps(depth))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_problem() -> QuadraticMetaProblem {
        QuadraticMetaProblem::new(vec![2.0, 0.5], vec![1.5, -3.0], 5000.0, 8).unwrap()
    }

    // Product-rule derivative of L = ½Σⱼ aⱼ·(dⱼ·Π_t(1 − η_t·aⱼ))²:
    // d ln Πⱼ / dη₀ = Σ_t −aⱼ·(η_t/η₀)/(1 − η_t·aⱼ) and
    // d ln Πⱼ / dλ  = Σ_t +aⱼ·k_t·η_t/(1 − η_t·aⱼ).
    fn oracle(
        problem: &QuadraticMetaProblem,
        eta0: f64,
        lambda: f64,
        steps: usize,
    ) -> (f64, [f64; 2]) {
        let mut loss = 0.0;
        let mut grad = [0.0, 0.0];
        for (&a, &d) in problem.curvatures.iter().zip(&problem.init) {
            let mut product = 1.0;
            let mut d_eta0 = 0.0;
            let mut d_lambda = 0.0;
            for t in 0..steps {
                let k_t = (1.0 + t as f64 / problem.t0).ln();
                let eta_t = eta0 * (-lambda * k_t).exp();
                product *= 1.0 - eta_t * a;
                d_eta0 += -a * (eta_t / eta0) / (1.0 - eta_t * a);
                d_lambda += a * k_t * eta_t / (1.0 - eta_t * a);
            }
            let term = 0.5 * a * d * d * product * product;
            loss += term;
            grad[0] += 2.0 * term * d_eta0;
            grad[1] += 2.0 * term * d_lambda;
        }
        (loss, grad)
    }

    #[test]
    fn unrolled_gradient_matches_the_closed_form() {
        let problem = sample_problem();
        let theta = [0.3, 0.4];
        for depth in 1..=6 {
            let steps = problem.inner_steps(depth);
            let (loss_want, grad_want) = oracle(&problem, theta[0], theta[1], steps);
            let loss = problem.loss(&theta, depth, 0).unwrap();
            let grad = problem.gradient(&theta, depth, 0).unwrap();
            assert!((loss - loss_want).abs() < 1e-12 * loss_want.abs());
            for j in 0..2 {
                assert!(
                    (grad[j] - grad_want[j]).abs() < 1e-8 * grad_want[j].abs(),
                    "depth {depth} coord {j}: {} vs {}",
                    grad[j],
                    grad_want[j]
                );
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences_of_the_loss() {
        let problem = sample_problem();
        let theta = [0.25, 0.15];
        let grad = problem.gradient(&theta, 5, 0).unwrap();
        let h = 1e-6;
        for j in 0..2 {
            let mut plus = theta;
            plus[j] += h;
            let mut minus = theta;
            minus[j] -= h;
            let fd = (problem.loss(&plus, 5, 0).unwrap() - problem.loss(&minus, 5, 0).unwrap())
                / (2.0 * h);
            assert!((grad[j] - fd).abs() < 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn meta_gradient_vanishes_at_the_one_step_solve() {
        // η₀ = 1/a zeroes the iterate on the first step, so the loss sits at
        // its global minimum of zero no matter the later schedule.
        let problem = QuadraticMetaProblem::new(vec![4.0], vec![1.0], 5000.0, 6).unwrap();
        let grad = problem.gradient(&[0.25, 0.3], 3, 0).unwrap();
        assert!(grad[0].abs() < 1e-10);
        assert!(grad[1].abs() < 1e-10);
        assert_eq!(problem.loss(&[0.25, 0.3], 3, 0).unwrap(), 0.0);
    }

    #[test]
    fn deep_gradients_approach_the_converged_limit() {
        // The inner loop converges, so the meta-gradient of its loss tends
        // to the limit value zero as the unroll deepens.
        let problem =
            QuadraticMetaProblem::new(vec![1.0, 0.3], vec![2.0, -1.5], 5000.0, 12).unwrap();
        let theta = [0.05, 0.1];
        let norm = |g: &[f64]| g.iter().map(|x| x * x).sum::<f64>().sqrt();
        let shallow = norm(&problem.gradient(&theta, 4, 0).unwrap());
        let deep = norm(&problem.gradient(&theta, 12, 0).unwrap());
        assert!(shallow > 1e-4);
        assert!(deep < 1e-12);
        assert!(deep < 1e-6 * shallow);
    }

    #[test]
    fn inner_divergence_is_reported_not_clipped() {
        let problem = QuadraticMetaProblem::new(vec![1.0], vec![1.0], 5000.0, 4).unwrap();
        let err = problem.gradient(&[3.0, 0.0], 2, 0);
        assert!(matches!(err, Err(Error::InnerDivergence { .. })));

        // A growing schedule (λ < 0) must be caught mid-unroll too.
        let err = problem.loss(&[1.999, -0.5], 4, 0);
        assert!(matches!(
            err,
            Err(Error::InnerDivergence { rate, bound: b }) if rate >= b
        ));
    }

    #[test]
    fn constructor_and_argument_validation() {
        assert!(QuadraticMetaProblem::new(vec![], vec![], 5000.0, 4).is_err());
        assert!(QuadraticMetaProblem::new(vec![1.0], vec![1.0, 2.0], 5000.0, 4).is_err());
        assert!(QuadraticMetaProblem::new(vec![-1.0], vec![1.0], 5000.0, 4).is_err());
        assert!(QuadraticMetaProblem::new(vec![1.0], vec![1.0], 0.0, 4).is_err());
        assert!(QuadraticMetaProblem::new(vec![1.0], vec![1.0], 5000.0, 0).is_err());
        assert!(QuadraticMetaProblem::new(vec![1.0], vec![1.0], 5000.0, 31).is_err());

        let problem = sample_problem();
        assert!(problem.gradient(&[0.1], 1, 0).is_err());
        assert!(problem.gradient(&[-0.1, 0.0], 1, 0).is_err());
        assert!(problem.gradient(&[0.1, f64::NAN], 1, 0).is_err());
        assert!(problem.gradient(&[0.1, 0.0], 9, 0).is_err());
    }

    #[test]
    fn costs_double_with_reuse() {
        let problem = sample_problem();
        let costs = problem.cost_model();
        assert_eq!(costs.cost(1), 3.0);
        assert_eq!(costs.cost(4), 17.0);
        assert!(costs.reuse());
        assert_eq!(problem.dim(), 2);
    }

    #[test]
    fn initial_points_are_reproducible_and_stable() {
        let problem = sample_problem();
        let a = problem.initial_point(7);
        assert_eq!(a, problem.initial_point(7));
        assert_ne!(a, problem.initial_point(8));
        // Must start inside the stability region at every depth.
        assert!(problem.gradient(&a, 8, 0).is_ok());
    }
}
