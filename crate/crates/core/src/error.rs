use num_bigint::BigUint;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(BigUint),
    #[error("characteristic {0} is too large (must be below 2^32)")]
    ModulusTooLarge(BigUint),
    #[error("field modulus {0} is reducible")]
    Reducible(String),
    #[error("degree mismatch: expected {expected}, got {actual}")]
    DegreeMismatch { expected: usize, actual: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("gcd of two zero polynomials")]
    BothZero,
    #[error("degree error: {0}")]
    DegreeError(String),
    #[error("polynomial is not squarefree")]
    NotSquarefree,
    #[error("order exceeds cap {0}")]
    CapExceeded(BigUint),
    #[error("input too large: {0}")]
    TooLarge(String),
    #[error("{0} is not {1}-smooth")]
    NotSmooth(BigUint, u64),
    #[error("order oracle failed after all attempts")]
    OracleExhausted,
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("parse error: {0}")]
    Parse(String),
}
