use thiserror::Error;

/// Every failure the toolkit can report.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not a prime power")]
    NotAPrimePower(u64),
    #[error("factorization budget exhausted on cofactor {cofactor}")]
    FactorizationTimeout { cofactor: String },
    #[error("gcd({base}, {modulus}) > 1, multiplicative order undefined")]
    NotCoprime { base: u64, modulus: u64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("field or search size {size} exceeds the configured cap {cap}")]
    SizeLimit { size: String, cap: u64 },
    #[error("operation undefined for the zero element")]
    ZeroElement,
    #[error("hypothesis of {variant} violated: {clause}")]
    HypothesisViolated { variant: String, clause: String },
    #[error("{prime} does not divide q^n - 1 for (q, n) = ({q}, {n})")]
    PrimeNotDivisor { prime: String, q: u64, n: u64 },
    #[error("sieving set has delta = {delta} <= 0")]
    DeltaNonPositive { delta: String },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("floating-point margin too small to decide: {0}")]
    Indeterminate(String),
    #[error("cache i/o: {0}")]
    Io(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
