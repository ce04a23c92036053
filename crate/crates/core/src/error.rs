use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Hooke tensor is not elliptic (lambda = {lambda}, mu = {mu})")]
    NotElliptic { lambda: f64, mu: f64 },

    #[error("invalid elasticity set: {0}")]
    InvalidSet(String),

    #[error("{what} did not converge within {iterations} iterations (residual {residual:e})")]
    IterationLimit { what: &'static str, iterations: usize, residual: f64 },

    #[error("{what}: minimizer search failed, best certified bound {bound:e}")]
    MinimizerSearch { what: &'static str, bound: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid boundary partition: {0}")]
    InvalidPartition(String),

    #[error("field size mismatch: expected {expected} entries, found {found}")]
    FieldSize { expected: usize, found: usize },

    #[error("initial data violates a compatibility condition: {0}")]
    Precondition(String),

    #[error(
        "initial stress leaves the elasticity set at cell {cell}: lambda = {lambda} is below the \
         required {required}"
    )]
    MarginViolation { cell: usize, lambda: f64, required: f64 },

    #[error("velocity blow-up at step {step} (t = {t}): |v|_inf = {vmax:e} exceeds guard {guard:e}")]
    BlowUp { step: usize, t: f64, vmax: f64, guard: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing required configuration key `{0}`")]
    MissingKey(String),

    #[error("invalid sweep: {0}")]
    Sweep(String),

    #[error("sweep member with lambda = {lambda} failed: {source}")]
    SweepMember {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("corrupt output: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
