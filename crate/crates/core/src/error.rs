use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: need a < b and n >= 2 (got a={a}, b={b}, n={n})")]
    InvalidGrid { a: f64, b: f64, n: usize },

    #[error("invalid interval: need a < b (got a={a}, b={b})")]
    InvalidInterval { a: f64, b: f64 },

    #[error("argument must be positive (got {0})")]
    NonPositiveArgument(f64),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("rejection budget exhausted after {attempts} attempts{}", block_suffix(*.block))]
    RejectionBudgetExhausted { attempts: u64, block: Option<usize> },

    #[error("order violation in coupled input: {0}")]
    OrderViolationInput(String),

    #[error("t must be positive (got {0})")]
    NonPositiveT(f64),

    #[error("effective sample size {ess:.1} below threshold {threshold}")]
    EffectiveSampleSizeTooSmall { ess: f64, threshold: f64 },

    #[error("mixing diagnostic failed: {0}")]
    MixingDiagnostic(String),

    #[error("no sample realized the event (lambda={lambda}, M={m})")]
    ZeroHits { lambda: f64, m: f64 },
}

fn block_suffix(block: Option<usize>) -> String {
    match block {
        Some(b) => format!(" in block {b}"),
        None => String::new(),
    }
}
