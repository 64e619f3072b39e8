//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid map or potential spec: {0}")]
    InvalidSpec(String),

    #[error("root solve failed: {0}")]
    RootSolve(String),

    #[error("not a vertex: combinatorial backend points must be vertex references")]
    NotAVertex,

    #[error("unknown vertex {0}")]
    UnknownVertex(u32),

    #[error("operation not supported for this backend: {0}")]
    Unsupported(&'static str),

    #[error("cell budget exceeded: need {needed} cells, budget {budget}")]
    CellBudget { needed: u64, budget: u64 },

    #[error("curve not invariant: {0}")]
    CurveNotInvariant(String),

    #[error("hypotheses violated: {0}")]
    HypothesesViolated(String),

    #[error("unlocatable point: {0}")]
    UnlocatablePoint(String),

    #[error("unit weights unsupported: map has a periodic critical point")]
    UnitWeightsUnsupported,

    #[error("map has periodic critical point")]
    PeriodicCriticalPoint,

    #[error("contraction failed: inverse branch did not converge in {0} steps")]
    ContractionFailed(usize),

    #[error("fixed point count mismatch: weighted sum {got}, expected {expect}")]
    FixedPointCount { got: u64, expect: u64 },

    #[error("normalization residual too large: {0}")]
    NormalizationResidual(f64),

    #[error("no admissible critical point")]
    NoAdmissibleCriticalPoint,

    #[error("refinement budget exceeded")]
    RefinementBudget,

    #[error("backend lacks periodic critical point")]
    NoPeriodicCriticalPoint,

    #[error("tree precondition violated: {0}")]
    TreePrecondition(String),

    #[error("coverage check failure: {0}")]
    CoverageCheck(String),

    #[error("unknown entropy label: {0}")]
    UnknownEntropyLabel(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
