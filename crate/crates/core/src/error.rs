use thiserror::Error;

/// Errors raised by the library. Variants split into input problems
/// (parse/precondition) and domain refusals; `Internal` marks a broken
/// invariant and should never surface on valid input.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("valuation of zero")]
    ValuationOfZero,
    #[error("dyadic Legendre undefined")]
    DyadicLegendre,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("zero argument: {0}")]
    Zero(&'static str),
    #[error("degenerate form")]
    Degenerate,
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("no finite support: {0}")]
    NoFiniteSupport(&'static str),
    #[error("{0}")]
    Domain(String),
    #[error("unmatched case: {0}")]
    UnmatchedCase(String),
    #[error("scan ceiling exceeded for class {class} at p = {p}")]
    ScanCeilingExceeded { p: u64, class: usize },
    #[error("prime budget exhausted: products over odd primes up to {limit} do not reach the interval")]
    PrimeBudgetExceeded { limit: u64 },
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Parse and precondition errors, as opposed to domain refusals.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::Arity(_) | Error::Degenerate | Error::Zero(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
