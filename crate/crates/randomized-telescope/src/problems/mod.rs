//! Optimization problems whose gradients come from a sequence of
//! increasingly accurate (and increasingly expensive) approximations.
//!
//! Each problem exposes the same interface: a gradient `Ḡ(θ, i)` at every
//! depth `i = 1..=H̄`, a matching loss, and a cost model saying what depth `i`
//! costs and whether evaluating depth `i` yields the shallower depths as free
//! byproducts. The telescoping machinery never looks inside a problem; it
//! only needs this trait.

mod dual;
mod lotka_volterra;
mod ode;
mod quadratic_meta;
mod synthetic;

pub use dual::{Dual, Scalar};
pub use lotka_volterra::{lv_rhs, LotkaVolterraVi, LvDataset};
pub use ode::rk4_solve;
pub use quadratic_meta::QuadraticMetaProblem;
pub use synthetic::{DecayKind, SyntheticDecayProblem};

use crate::telescope::CostModel;
use crate::Result;

/// A stochastic objective with a hierarchy of gradient approximations.
///
/// Depths are 1-based; depth `horizon()` is the most accurate gradient the
/// problem offers and is what an untruncated optimizer would use. `noise_seed`
/// selects the stochastic sample (minibatch, noise draw): calls with the same
/// seed and different depths must share their randomness, since the telescope
/// differences `Ḡ_{i} − Ḡ_{i−1}` are only small under common random numbers.
pub trait GradientSequence {
    /// Number of available depths, `H̄ ≥ 1`.
    fn horizon(&self) -> usize;

    /// Dimension of the parameter vector.
    fn dim(&self) -> usize;

    /// Cost of each depth and whether deeper evaluations reuse shallower ones.
    fn cost_model(&self) -> &CostModel;

    /// Starting parameters for an optimization run.
    fn initial_point(&self, seed: u64) -> Vec<f64>;

    /// Stochastic gradient estimate at the given depth.
    fn gradient(&self, theta: &[f64], depth: usize, noise_seed: u64) -> Result<Vec<f64>>;

    /// Stochastic loss estimate at the given depth, matching `gradient`'s
    /// sample when given the same seed.
    fn loss(&self, theta: &[f64], depth: usize, noise_seed: u64) -> Result<f64>;

    /// Loss used for progress reporting: full depth, and typically a larger
    /// sample than training draws. Defaults to `loss` at `horizon()`.
    fn eval_loss(&self, theta: &[f64], noise_seed: u64) -> Result<f64> {
        self.loss(theta, self.horizon(), noise_seed)
    }
}
