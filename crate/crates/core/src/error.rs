use thiserror::Error;

pub type Result<T> = std::result::Result<T, DpError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DpError {
    #[error("{what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        got: String,
    },

    #[error("{what}: entry ({row}, {col}) = {value} is not a finite number")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("{what}: entry ({row}, {col}) = {value} is negative")]
    NegativeEntry {
        what: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("{what}: entries sum to {sum}, expected 1")]
    NotNormalized { what: &'static str, sum: f64 },

    #[error("joint pmf: output symbol y{column} has zero probability; remove unused output symbols")]
    UnusedOutputSymbol { column: usize },

    #[error("estimator: column {column} sums to {sum}, expected 1")]
    NotColumnStochastic { column: usize, sum: f64 },

    #[error("coupling: {0}")]
    BadCoupling(String),

    #[error("metric: {0}")]
    InvalidMetric(String),

    #[error("metric: entry ({row}, {col}) = {value} lies outside [0, 1]; rescale the metric and the perception level jointly")]
    MetricOutOfRange { row: usize, col: usize, value: f64 },

    #[error("perception level {0} must be finite and nonnegative")]
    InvalidPerception(f64),

    #[error("{0}")]
    Unsupported(String),

    #[error("linear program: {0}")]
    Lp(#[from] LpError),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("grid oracle: no grid point satisfies the perception constraint at P = {0}")]
    NoFeasibleGridPoint(f64),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("iteration budget of {0} pivots exhausted")]
    IterationLimit(usize),

    #[error("cycling detected after {0} pivots (basis repeated)")]
    Cycling(usize),

    #[error("solution is not optimal (status {0:?})")]
    NotOptimal(crate::lp::LpStatus),

    #[error("primal problem is infeasible")]
    Infeasible,

    #[error("primal problem is unbounded")]
    Unbounded,

    #[error("basis matrix is singular")]
    SingularBasis,
}
