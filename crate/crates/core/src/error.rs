use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("region does not lie on grid lines: {0}")]
    OffGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("linear solver failed, achieved residual {residual:e}")]
    SolverFailure { residual: f64 },

    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    #[error("compatibility violated: {0}")]
    Compatibility(String),

    #[error("degenerate marching coefficient: {0}")]
    Degeneracy(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("ledger incomplete: term `{0}` is absent")]
    LedgerIncomplete(String),

    #[error("Newton iteration did not converge after {iterations} steps (residuals: {trace:?})")]
    NonConvergence { iterations: usize, trace: Vec<f64> },

    #[error("epsilon {eps:e} is below the solver robustness floor {floor:e}; refine the grid or raise epsilon")]
    BelowRobustnessFloor { eps: f64, floor: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
