use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of supported range: {0}")]
    OutOfRange(String),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("principal character (k = 0 mod q-1) is excluded")]
    PrincipalCharacter,

    #[error("modulus {q} exceeds the configured memory cap {cap}")]
    MemoryCap { q: u64, cap: u64 },

    #[error("window length H = {h} must satisfy 1 <= H < q = {q}")]
    BadWindow { h: u64, q: u64 },

    #[error("invalid rectangle: requires a < b and c < d")]
    InvalidRectangle,

    #[error("quadrature failed to converge: estimated error {estimate:.3e} > tol {tol:.3e} after {panels} panels")]
    QuadratureFailure {
        estimate: f64,
        tol: f64,
        panels: usize,
    },

    #[error("moment ({r},{s}) missing from the table")]
    MissingMoment { r: u32, s: u32 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed series dump: {0}")]
    BadDump(String),
}
