use thiserror::Error;

/// Failures reported by the numerical kernels.
///
/// Every variant corresponds to a condition the caller can act on; none of
/// them is converted into a silent infinity or NaN.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Root finder did not meet its residual tolerance within the iteration cap.
    #[error("root finder did not converge (residual {residual:.3e})")]
    NonConvergence { residual: f64 },

    /// A preimage tree or transfer tree would exceed the configured node budget.
    #[error("node budget exceeded: {needed} nodes requested, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    /// A cumulative derivative underflowed; the base point sits on the critical tree.
    #[error("degenerate derivative |(p^n)'| = {0:.3e}")]
    DegenerateDerivative(f64),

    /// A bisection bracket showed no sign change.
    #[error("no sign change on [{lo}, {hi}] (values {f_lo:.6}, {f_hi:.6})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// Böttcher continuation could not keep track of its branch.
    #[error("branch lost while continuing the Böttcher map at |z| = {0}")]
    BranchLoss(f64),

    /// The fixed point handed to the linearizer is not repelling.
    #[error("fixed point is not repelling (|multiplier| = {0})")]
    NotRepelling(f64),

    /// A value left the double-precision range.
    #[error("value overflows double precision")]
    Overflow,

    /// Halving the linearizer scale never produced a separated tract.
    #[error("scale fell below 1e-12 without separating the tract from the disk")]
    ScaleFloor,

    /// A quotient would divide by a value below 1e-300.
    #[error("division by a vanishing quantity")]
    ZeroDenominator,

    /// No point with |f| > R·e was found in the search annulus.
    #[error("no tract found")]
    NoTractFound,

    /// Inverse-branch continuation shrank its step below 1e-12.
    #[error("continuation stalled near xi = {re} + {im}i")]
    ContinuationStall { re: f64, im: f64 },

    /// Dyadic block sums stopped decreasing.
    #[error("transfer series diverges (block sums non-decreasing from block {block})")]
    DivergenceDetected { block: usize },

    /// A parameter grid is empty, unsorted, or out of range.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Malformed input that is not a grid problem.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable machine-readable name, used in JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonConvergence { .. } => "NonConvergence",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::DegenerateDerivative(_) => "DegenerateDerivative",
            Error::NoSignChange { .. } => "NoSignChange",
            Error::BranchLoss(_) => "BranchLoss",
            Error::NotRepelling(_) => "NotRepelling",
            Error::Overflow => "Overflow",
            Error::ScaleFloor => "ScaleFloor",
            Error::ZeroDenominator => "ZeroDenominator",
            Error::NoTractFound => "NoTractFound",
            Error::ContinuationStall { .. } => "ContinuationStall",
            Error::DivergenceDetected { .. } => "DivergenceDetected",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
