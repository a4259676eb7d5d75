use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input that cannot be interpreted at all (non-square matrix, NaN, bad shape).
    #[error("malformed input: {0}")]
    Malformed(String),

    /// A distance matrix that parses but fails one of the metric axioms.
    #[error("not a metric: {0}")]
    InvalidMetric(String),

    #[error("graph is disconnected: no path from vertex {from} to vertex {to}")]
    Disconnected { from: usize, to: usize },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("objects live on different spaces: {0}")]
    SpaceMismatch(String),

    #[error("index {index} out of range for a space with {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("exhaustive search over {maps} maps exceeds the budget of {budget}; shrink the spaces")]
    SearchBudget { maps: f64, budget: f64 },

    #[error("transport solver failed ({status}): {detail}")]
    Solver { status: SolverStatus, detail: String },

    /// A bound that holds as a theorem was observed to fail; indicates a bug.
    #[error("bound violated: {0}")]
    BoundViolated(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Infeasible,
    IterationLimit,
    NotOptimal,
    DualityGap,
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::IterationLimit => "iteration limit",
            SolverStatus::NotOptimal => "optimality certificate failed",
            SolverStatus::DualityGap => "duality gap too large",
        };
        f.write_str(s)
    }
}
