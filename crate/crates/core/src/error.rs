use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),

    #[error("schema has {0} attributes; at most 64 are supported")]
    TooManyAttributes(usize),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("attribute index {0} is outside the schema")]
    AttributeOutOfRange(usize),

    #[error("line {line}: malformed functional dependency `{text}`: {reason}")]
    FdSyntax {
        line: usize,
        text: String,
        reason: String,
    },

    #[error("functional dependency {index} is trivial: its right-hand side appears on the left")]
    TrivialFd { index: usize },

    #[error("extension vector has {found} entries but the FD set has {expected}")]
    ExtensionArity { expected: usize, found: usize },

    #[error("extension of FD {index} touches its own attributes")]
    InvalidExtension { index: usize },

    #[error("attribute set must be non-empty")]
    EmptyAttrSet,

    #[error("instances are not aligned: {0}")]
    Misaligned(String),

    #[error("rate {0} is outside [0, 1]")]
    InvalidRate(f64),

    #[error("cannot remove {requested} LHS attributes without emptying an LHS (at most {available})")]
    LhsExhausted { requested: usize, available: usize },

    #[error("invalid variable literal `{0}`")]
    BadVariable(String),

    #[error("invalid tau range: lower bound {lo} exceeds upper bound {hi}")]
    TauRange { lo: u64, hi: u64 },
}
