use thiserror::Error;

/// Errors shared across the numerical modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate weight: nonzero value at a node where the weight vanishes ({0})")]
    DegenerateWeight(String),

    #[error("Newton iteration did not converge: {0}")]
    NewtonFailure(String),

    #[error("converged to the trivial solution")]
    TrivialSolution,

    #[error("shooting failed: {0}")]
    ShootingFailure(String),

    #[error("eigensolver failure: {0}")]
    EigenFailure(String),

    #[error("linearized operator is degenerate: {0}")]
    DegenerateOperator(String),

    #[error("time step rejected: {0}")]
    StepFailure(String),

    #[error("energy dissipation violated: {0}")]
    DissipationViolated(String),

    #[error("extinction bracket not found: {0}")]
    NonBracketing(String),

    #[error("secant iteration did not converge: {0}")]
    SecantFailure(String),

    #[error("fit inconclusive: {0}")]
    FitInconclusive(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
