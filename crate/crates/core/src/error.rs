use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure specification: {0}")]
    InvalidSpec(String),
    #[error("integral is not finite and positive: {0}")]
    NonFinite(String),
    #[error("epsilon schedule must be strictly decreasing with at least 3 entries (got {0:?})")]
    InsufficientSchedule(Vec<f64>),
    #[error("jump floor {floor} must lie strictly below the truncation level {epsilon}")]
    FloorAboveTruncation { floor: f64, epsilon: f64 },
    #[error("restricted measure has no mass above floor {0}")]
    EmptySupport(f64),
    #[error("expected jump count {expected:.3e} exceeds the budget {cap:.3e}")]
    BudgetExceeded { expected: f64, cap: f64 },
    #[error("jump at (t={t}, x={x}) falls outside the lattice")]
    JumpOutsideLattice { t: f64, x: f64 },
    #[error("event-driven solver needs a driftless record (drift = {0}); use the grid solver")]
    DriftUnsupported(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("point (t={t}, x={x}) is outside the lattice")]
    OutOfDomain { t: f64, x: f64 },
    #[error("quadrature window [-{half_width}, {half_width}] misses mass {tail:.3e}")]
    WindowTooSmall { half_width: f64, tail: f64 },
    #[error("test function support [{lo}, {hi}] is not inside the open window ({window_lo}, {window_hi})")]
    SupportViolation {
        lo: f64,
        hi: f64,
        window_lo: f64,
        window_hi: f64,
    },
    #[error("sample is empty")]
    EmptySample,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
