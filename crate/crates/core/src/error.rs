use thiserror::Error;

/// Errors raised by constructors, pipelines and verifiers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// The eigenvalue-1 left eigenspace has dimension larger than one.
    #[error("stationary distribution is not unique (eigenspace dimension {0})")]
    NonUnique(usize),

    /// The requested expectation is infinite.
    #[error("expectation diverges: rate {rate} times the taboo block has spectral radius >= 1")]
    Divergent { rate: f64 },

    #[error("drift inequality violated at state {state} by {excess:e}")]
    DriftViolation { state: usize, excess: f64 },

    #[error("requested rate exceeds the certified rate (log-rate ratio {ratio})")]
    R2TooLarge { ratio: f64 },

    #[error("eta = {eta} outside (1/r, 1) for r = {r}")]
    EtaRange { eta: f64, r: f64 },

    #[error("rate {r} not in (1, 1/lambda) for lambda = {lambda}")]
    RateRange { r: f64, lambda: f64 },

    #[error("no contracting rate exists for the supplied block constants")]
    NoContraction,

    #[error("split kernel entry ({row}, {col}) = {value:e} is negative")]
    NegativeRow { row: usize, col: usize, value: f64 },

    #[error("hypothesis ({clause}) fails at state {state}: {detail}")]
    HypothesisFail {
        clause: &'static str,
        state: usize,
        detail: String,
    },

    #[error("bound violated at state {state}, n = {n}: distance {distance:e} > bound {bound:e}")]
    BoundViolation {
        state: usize,
        n: usize,
        distance: f64,
        bound: f64,
    },

    #[error("{censored} of {total} replications reached the step cap")]
    ExcessCensoring { censored: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}
