use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("block {block}: n * p = {value} is not a positive integer")]
    NonIntegerBlockSize { block: usize, value: f64 },

    #[error("interaction matrix is not symmetric at ({i}, {j})")]
    AsymmetricInteraction { i: usize, j: usize },

    #[error("interaction entry ({i}, {j}) = {value} is not allowed (off-diagonal entries must be > 0, diagonal >= 0)")]
    NonPositiveInteraction { i: usize, j: usize, value: f64 },

    #[error("block proportions must be positive and sum to 1 (sum = {sum})")]
    BadProportions { sum: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("magnetization state is outside the state space")]
    StateOutOfRange,

    #[error("lumped state space has {size} states, above the cap of {cap}")]
    StateSpaceTooLarge { size: u128, cap: u128 },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: u64 },

    #[error("matrix is reducible")]
    ReducibleMatrix,

    #[error("beta = {beta} is not below the critical value {beta_cr}")]
    NotHighTemperature { beta: f64, beta_cr: f64 },

    #[error("interaction matrix is not positive definite (smallest eigenvalue {min_eigenvalue})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("top eigenvalue of the critical conjugate is {value}, expected a simple eigenvalue 1")]
    TopEigenvalueNotOne { value: f64 },

    #[error("adaptive quadrature failed to reach tolerance")]
    QuadratureFailure,

    #[error("distance to stationarity still above epsilon after {ceiling} steps")]
    NotConverged { ceiling: u64 },

    #[error("one side of the cut carries no stationary mass")]
    EmptySide,

    #[error("the two configurations have different block magnetizations")]
    MagnetizationMismatch,

    #[error("reference configuration is not balanced")]
    BadReference,

    #[error("coordinate {index} = {value} lies on the boundary of [-1, 1]")]
    BoundaryValue { index: usize, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
