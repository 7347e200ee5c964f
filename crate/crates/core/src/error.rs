use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate step distribution: {0}")]
    Degenerate(String),
    #[error("probabilities must be positive and sum to 1 (sum = {0})")]
    BadProbabilities(String),
    #[error("walk is not strongly aperiodic; empirical estimation of C0 required")]
    EmpiricalC0Required,
    #[error("walk is not aperiodic: support generates a subgroup of index {0}")]
    NotAperiodic(u64),
    #[error("interval [{start}, {end}) out of range for path of length {len}")]
    IntervalOutOfRange { start: usize, end: usize, len: usize },
    #[error("occupation field is empty")]
    EmptyField,
    #[error("matrices do not commute")]
    NonCommuting,
    #[error("matrix is not unimodular: det = {0}")]
    NotUnimodular(String),
    #[error("unit-circle eigenvalue for A^l with l = ({0}, {1})")]
    UnitCircleEigenvalue(i32, i32),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("modulus {0} is not prime")]
    ModulusNotPrime(u64),
    #[error("invalid trigonometric polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("coefficient rule is not summable: {0}")]
    NotSummable(String),
    #[error("partition size {0} outside 1..=10")]
    PartitionSizeOutOfRange(usize),
    #[error("coefficient support of {0} terms exceeds the limit of {1}")]
    SupportTooLarge(usize, usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate asymptotic variance")]
    DegenerateVariance,
}

pub type Result<T> = std::result::Result<T, Error>;
