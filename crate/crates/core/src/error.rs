use thiserror::Error;

/// Errors raised by the engines and their supporting arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("{0} is not invertible modulo {1}")]
    NotInvertible(u64, u64),

    #[error("no prime below 2^{bits} separates the given values")]
    BudgetExhausted { bits: u32 },

    #[error("truncation mismatch: {0} vs {1}")]
    TruncationMismatch(usize, usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("series has zero constant term and cannot be inverted")]
    SeriesNotInvertible,

    #[error("matrix is singular at the constant term")]
    Singular,

    #[error("batch too large: touches {got} rows/columns, cap is {cap}")]
    BatchTooLarge { got: usize, cap: usize },

    #[error("instance exceeds the oracle cap of {cap} (got {got})")]
    OracleScale { got: usize, cap: usize },

    #[error("circulation search failed after {attempts} attempts (bound {bound})")]
    SearchFailure { attempts: usize, bound: i64 },

    #[error("weight magnitude overflow: {0}")]
    Magnitude(String),

    #[error("no candidate in the family is isolating")]
    FamilyFailure,

    #[error("graph is not bipartite: {0}")]
    NotBipartite(String),

    #[error("no path from {0} to {1}")]
    NoPath(usize, usize),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("isolation failure in candidate {candidate}: {detail}")]
    IsolationFailure { candidate: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
