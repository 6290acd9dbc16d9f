use thiserror::Error;

use crate::glm::GlmFit;

/// Argument outside the domain of a transform or measure.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DomainError {
    #[error("lambda must lie in [0,1], got {0}")]
    Lambda(f64),
    #[error("probability must lie strictly inside (0,1), got {0}")]
    Probability(f64),
    #[error("transformed value must be positive and finite, got {0}")]
    NonPositive(f64),
    #[error("inverse transform of {0} saturates to 1 in double precision")]
    Saturated(f64),
    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),
}

/// Problems with the rows handed to the fitter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("dataset has no rows")]
    Empty,
    #[error("column `{column}` has {found} rows, expected {expected}")]
    LengthMismatch {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("column `{column}` row {row}: expected 0 or 1, got {value}")]
    NonBinary {
        column: String,
        row: usize,
        value: f64,
    },
    #[error("column `{column}` row {row}: value is not finite")]
    NonFinite { column: String, row: usize },
    #[error("frequency weight at row {row} must be finite and nonnegative, got {value}")]
    BadWeight { row: usize, value: f64 },
}

/// Why IRLS stopped without meeting the convergence criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stall {
    MaxIterations,
    StepHalving,
}

impl std::fmt::Display for Stall {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stall::MaxIterations => write!(f, "iteration limit reached"),
            Stall::StepHalving => write!(f, "step halving failed to reduce the deviance"),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum GlmError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("design matrix is rank deficient: rank {rank} < {columns} columns")]
    RankDeficient { rank: usize, columns: usize },
    /// The partially fitted model is kept so callers can still report it.
    #[error("IRLS did not converge after {} iterations: {reason}", fit.iterations)]
    NotConverged { fit: Box<GlmFit>, reason: Stall },
    #[error("Wald intervals need a converged fit")]
    UnconvergedFit,
    #[error("coefficient index {index} out of range for {len} coefficients")]
    CoefficientIndex { index: usize, len: usize },
    #[error("confidence level must lie strictly inside (0,1), got {0}")]
    Level(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("no prevalence value satisfies rr * p0 < 1 for rr = {rr}")]
    EmptyGrid { rr: f64 },
    #[error("risk ratio must be positive and finite, got {0}")]
    RiskRatio(f64),
    #[error("rr * p0 = {0} must be below 1")]
    ExposedRisk(f64),
    #[error("{0}")]
    Spec(String),
    #[error("every replication failed for lambda = {lambda}")]
    AllReplicationsFailed { lambda: f64 },
}
