use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("quadrature did not converge to {tol:e} within {panels} panels ({context})")]
    NonConvergedQuadrature {
        tol: f64,
        panels: usize,
        context: String,
    },

    #[error("recurrence lost positivity at k = {k} (b_k = {value:e}); raise quadrature precision or lower k_max")]
    LostPositivity { k: usize, value: f64 },

    #[error("index {index} outside recurrence table of depth {depth}")]
    IndexOutOfTable { index: usize, depth: usize },

    #[error("argument {0} is on (or too close to) the real axis")]
    OnRealAxis(String),

    #[error("coincident arguments: {0}")]
    CoincidentArguments(String),

    #[error("confluence of order {order} is not supported here: {context}")]
    ConfluentOrderTooHigh { order: usize, context: String },

    #[error("permutation budget exceeded: {size} > cap {cap}")]
    PermutationBudgetExceeded { size: usize, cap: usize },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("x = {x} is outside the support (-{a}, {a})")]
    OutsideSupport { x: f64, a: f64 },

    #[error("unsupported potential for this operation: {0}")]
    UnsupportedPotential(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("variance guard violated: |Im eps| = {im:e} < {threshold:e}")]
    VarianceGuardViolated { im: f64, threshold: f64 },

    #[error("coincident roots: {0}")]
    CoincidentRoots(String),

    #[error("size budget exceeded: {0}")]
    SizeBudgetExceeded(String),

    #[error("convergence domain violated: {0}")]
    ConvergenceDomainViolated(String),

    #[error("parse error: {0}")]
    Parse(String),
}
