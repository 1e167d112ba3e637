//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("p = {0} must be an odd prime")]
    NotOddPrime(u64),

    #[error("level n must be >= 1, got {0}")]
    BadLevel(i64),

    #[error("element ({a}, {b}) is not a unit at level {level}")]
    NotAUnit { a: u64, b: u64, level: u32 },

    #[error("element at level {elt_level} does not belong to a level-{group_level} group")]
    LevelMismatch { elt_level: u32, group_level: u32 },

    #[error("incompatible arguments: {0}")]
    Incompatible(String),

    #[error("filtration index {j} out of range [0, {n}]")]
    FiltrationRange { j: u32, n: u32 },

    #[error("character has conductor {conductor}, not primitive at level {level}")]
    NotPrimitive { conductor: u32, level: u32 },

    #[error("c must have valuation {expected}, got {got}")]
    BadValuation { expected: u32, got: u32 },

    #[error("value does not have unit modulus")]
    NotUnitModulus,

    #[error("gcd({a}, {l}) != 1: not a Galois automorphism of Q(zeta_{l})")]
    NotCoprime { a: u64, l: u64 },

    #[error("unramified Steinberg twists require an unramified nebentypus")]
    SteinbergRamified,

    #[error("theta factors through the norm map; the induced representation is reducible")]
    NormFactoring,

    #[error("theta has odd conductor {0}; quadratic nebentypus forces even conductor")]
    OddConductor(u32),

    #[error("orbit action left the candidate set ({0}); upstream fiber bug")]
    NotClosed(String),

    #[error("hypothesis on N fails: {0}")]
    StrictHypothesis(String),

    #[error("cannot produce a numeric count: |S_asym| is symbolic here ({0})")]
    SymbolicCount(String),

    #[error("LMFDB data unavailable: {0}")]
    Unavailable(String),

    #[error("unexpected LMFDB response schema: {msg}; payload retained: {payload}")]
    Schema { msg: String, payload: String },

    #[error("HTTP request failed: {0}")]
    Http(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("verification mismatch: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
