use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("NaN is not an element of the min-plus carrier")]
    NotANumber,
    #[error("-inf is not representable in the min-plus carrier")]
    NegativeInfinity,
    #[error("finite arithmetic overflowed to infinity in {0}")]
    Overflow(&'static str),
    #[error("{name} = {value} is outside {domain}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid measure `{0}` (expected shannon[:C], renyi:a, tsallis:a or kl:q)")]
    MeasureSpec(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("tree parse error at byte {pos}: {msg}")]
    TreeParse { pos: usize, msg: String },
    #[error("node with {arity} children violates the arity range [2, {bound}]")]
    Arity { arity: usize, bound: usize },
    #[error("leaf labels must be a permutation of 1..={n}: {msg}")]
    Labels { n: usize, msg: String },
    #[error("size {n} exceeds the supported maximum {max}")]
    TooLarge { n: usize, max: usize },
    #[error("no h value supplied for arity {0}")]
    MissingArity(usize),
    #[error("malformed sampled function: {0}")]
    Sampled(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_) | Error::Overflow(_))
    }

    pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Self {
        Error::OutOfDomain {
            name,
            value,
            domain,
        }
    }
}
