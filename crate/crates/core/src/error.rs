use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite real input: {0}")]
    NonFinite(f64),

    #[error("cannot parse {what} from {input:?}: {reason}")]
    Parse {
        what: &'static str,
        input: String,
        reason: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("approximating function table has {len} entries, but n = {n} was requested")]
    TableOutOfRange { n: u64, len: usize },

    #[error("query mode {mode} does not match the requested counter")]
    WrongMode { mode: &'static str },

    #[error("sieve bound {requested} exceeds the memory budget of {budget} entries")]
    SieveBudget { requested: u64, budget: u64 },

    #[error("fibre hypothesis violated: multiplicative exponent w = {w} is not below (k-1)/(k-2) for k = {k}")]
    FibreHypothesis { k: usize, w: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn parse_err(what: &'static str, input: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        what,
        input: input.to_string(),
        reason: reason.into(),
    }
}
