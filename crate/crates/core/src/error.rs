use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("unknown attribute: {0}")]
    UnknownAttribute(String),

    #[error("attribute index {index} out of range for domain with {len} attributes")]
    AttributeOutOfRange { index: usize, len: usize },

    #[error("axis {axis} out of range for array with {ndim} axes")]
    AxisOutOfRange { axis: usize, ndim: usize },

    #[error("invalid axis operation: {0}")]
    InvalidAxisOp(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },

    #[error("attribute set {sub:?} is not a subset of {sup:?}")]
    NotSubset { sub: Vec<usize>, sup: Vec<usize> },

    #[error("too many attributes for subset enumeration: {0} (limit {limit})", limit = crate::tensor::MAX_ENUMERATED_ATTRS)]
    TooManyAttributes(usize),

    #[error("missing residual for attribute set {0:?}")]
    MissingResidual(Vec<usize>),

    #[error("record {record} has value {value} outside [0, {size}) for attribute {attr}")]
    ValueOutOfRange {
        record: usize,
        attr: usize,
        value: usize,
        size: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("privacy budget exceeded: used {used} + cost {cost} > total {total}")]
    BudgetExceeded { used: f64, cost: f64, total: f64 },

    #[error("empty candidate set")]
    EmptyCandidates,

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("oracle size cap exceeded: {0}")]
    SizeCap(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
