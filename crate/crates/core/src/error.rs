use thiserror::Error;

/// Errors raised by the probability calculus, mechanisms, learners and verifiers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidPmf(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("requires eps below ln 2, got eps = {eps}")]
    ChainHypothesis { eps: f64 },

    #[error("distributions are not ({eps}, {delta})-close: smallest delta is {actual}")]
    NotClose { eps: f64, delta: f64, actual: f64 },

    #[error("support mismatch: outcome {0} has mass under p but none under q")]
    SupportMismatch(String),

    #[error("entry {0} is not a bit")]
    NonBinary(f64),

    #[error("quadrature did not converge to {tolerance:e} (estimated error {estimate:e})")]
    QuadratureNonConvergence { tolerance: f64, estimate: f64 },

    #[error("enumeration cap exceeded: {required} evaluations requested, cap is {cap}")]
    CapExceeded { required: f64, cap: u64 },

    #[error("mechanism `{0}` does not expose an exact output distribution")]
    NoExactPmf(String),

    #[error("sample is not realizable: {0}")]
    NotRealizable(String),

    #[error("log-likelihood diverges: outcome {0} has zero probability on some sample")]
    Divergence(String),

    #[error("no eps up to {0} reaches the target failure mass")]
    UnboundedEps(f64),

    #[error("required sample size {required} exceeds the limit {limit}")]
    SampleSizeTooLarge { required: f64, limit: u64 },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("slope undefined: need at least two distinct sample sizes")]
    SlopeUndefined,

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
