use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {n} outside supported range {min}..={max}")]
    QubitCount { n: u32, min: u32, max: u32 },

    #[error("invalid bipartition: {0}")]
    Bipartition(String),

    #[error("dimension mismatch: state has {state} qubits, bipartition expects {expected}")]
    DimensionMismatch { state: u32, expected: u32 },

    #[error("brute-force evaluation limited to n <= {limit}, got n = {n}")]
    TooLargeForOracle { n: u32, limit: u32 },

    #[error("enumeration of q = {q}, n = {n} needs q^(2^n) <= 2^26 states")]
    InfeasibleEnumeration { n: u32, q: u32 },

    #[error("phase order q = {0} must be at least 2")]
    PhaseOrder(u32),

    #[error("ensemble mismatch: {0}")]
    Ensemble(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("non-finite observation {0}")]
    NonFinite(f64),

    #[error("need at least {need} observations, have {have}")]
    TooFewObservations { need: u64, have: u64 },

    #[error("invalid histogram range lo = {lo}, hi = {hi}, bins = {bins}")]
    HistogramRange { lo: f64, hi: f64, bins: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
