use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not an odd prime")]
    InvalidPrime(u64),
    #[error("delta {delta} is not a quadratic non-residue mod {p}")]
    InvalidDelta { p: u64, delta: u64 },
    #[error("expected a p-adic unit, got {0}")]
    NotUnit(String),
    #[error("Hilbert symbol needs nonzero arguments")]
    ZeroArgument,
    #[error("form is not p-integral (entry {0})")]
    NotPIntegral(String),
    #[error("form is singular")]
    Singular,
    #[error("expected rank {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("enumeration of {needed} points exceeds budget {budget}; raise GKLOC_BUDGET to allow it")]
    Budget { needed: u128, budget: u128 },
    #[error("no unimodular block to split off (all exponents are positive)")]
    NotReducible,
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("target form is not represented by the space of special endomorphisms")]
    NotRepresentable,
    #[error("wrong case: {0}")]
    WrongCase(String),
    #[error("p-adic precision exhausted ({0})")]
    PrecisionExhausted(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("not regular: {0}")]
    NotRegular(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
