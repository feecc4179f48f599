use thiserror::Error;

/// Errors raised by the operator algebra, the solvers and the experiment pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("three pairwise-distinct collinear points have no circumcenter")]
    CollinearNoCircumcenter,

    #[error("weight {0} outside the open interval (0, 1)")]
    InvalidWeight(f64),

    #[error("invalid convex-combination weights: {0}")]
    InvalidWeights(String),

    #[error("could not bracket the multiplier root of the ellipsoid projection")]
    RootNotBracketed,

    #[error("point is {deviation:e} away from the subspace")]
    NotInSubspace { deviation: f64 },

    #[error("lifted point is not diagonal: block deviation {deviation:e} exceeds {tol:e}")]
    NotDiagonal { deviation: f64, tol: f64 },

    #[error("block count mismatch: expected {expected}, found {found}")]
    BlockCountMismatch { expected: usize, found: usize },

    #[error("empty operator list")]
    EmptyOperatorList,

    #[error("rate estimation needs at least one distance above the floor with a successor")]
    InsufficientHistory,

    #[error("diagnostic `{diagnostic}` failed at iteration {iteration}: value {value:e}")]
    DiagnosticFailure {
        iteration: usize,
        diagnostic: &'static str,
        value: f64,
    },

    #[error("initial point still inside some set after {doublings} doublings of eta")]
    CannotExitSets { doublings: usize },

    #[error("empty group `{0}`")]
    EmptyGroup(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("method `{method}` cannot be applied to this problem: {reason}")]
    UnsupportedProblem {
        method: &'static str,
        reason: &'static str,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
