use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} unsupported: the model is defined for 3 <= d <= 16")]
    InvalidDimension(u32),

    #[error("infinite energy pair: points {0} and {1} are co-located")]
    CoLocated(usize, usize),

    #[error("count tree is not resolved: node {0} holds {1} points but has no children")]
    Unresolved(String, u64),

    #[error("malformed count tree: {0}")]
    MalformedTree(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("budget exceeded: {what} needs {required}, limit is {limit}")]
    Budget {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    #[error("descent passed level {0}; fixed-point resolution exhausted")]
    DepthExhausted(u32),

    #[error("partition function did not converge by depth {depth} (last delta {delta:e})")]
    NoConvergence { depth: u32, delta: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
