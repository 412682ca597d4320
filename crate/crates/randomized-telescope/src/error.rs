use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A probability vector failed validation (negative mass, bad sum, empty).
    #[error("invalid truncation distribution: {0}")]
    InvalidDistribution(String),

    /// A weight scheme cannot satisfy the unbiasedness constraint for this q.
    #[error("invalid weight scheme: {0}")]
    InvalidWeights(String),

    /// Inputs that must share a horizon or dimension do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Exhaustive enumeration was asked for a horizon it cannot afford.
    #[error("horizon {0} too large to enumerate exactly (limit {1})")]
    HorizonTooLarge(usize, usize),

    /// A cost model failed validation (nonpositive or decreasing entries).
    #[error("invalid cost model: {0}")]
    InvalidCost(String),

    /// Tuning statistics are all zero, so no sampling distribution is defined.
    #[error("all squared difference norms are zero; optimal q is undefined")]
    AllZeroNorms,

    /// A quantity that must be strictly positive is not.
    #[error("{0} must be positive (got {1})")]
    NonPositive(&'static str, f64),

    /// A scalar or vector argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The ODE state left the trust region or became non-finite.
    #[error("ODE state blew up at step {step}")]
    OdeBlowUp { step: usize },

    /// The inner optimization loop of the meta problem diverges for this rate.
    #[error("inner learning rate {rate} exceeds the stability bound {bound}")]
    InnerDivergence { rate: f64, bound: f64 },

    /// A run was asked to do something its budget cannot cover.
    #[error("budget {budget} is smaller than one tuning pass ({required})")]
    BudgetTooSmall { budget: f64, required: f64 },

    /// Bad experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
