use thiserror::Error;

/// Every precondition the toolkit checks maps to one variant, and each
/// message names the violated condition.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("alphabet mismatch: expected {expected} symbols with identical labels, got {found}")]
    AlphabetMismatch { expected: usize, found: usize },

    #[error("invalid moment order: {0}")]
    InvalidOrder(String),

    #[error("invalid weight function: {0}")]
    InvalidWeights(String),

    #[error("invalid length function: {0}")]
    InvalidLengths(String),

    #[error("Kraft inequality violated: sum of 2^-L is {sum}")]
    KraftViolation { sum: f64 },

    #[error("search space guard: {0}")]
    SearchSpaceGuard(String),

    #[error("invalid guessing function: {0}")]
    InvalidGuessing(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("M too small: need M > log2|X| + 2 = {threshold:.6} for |X| = {alphabet_size}, got M = {m}")]
    MTooSmall {
        m: u64,
        alphabet_size: usize,
        threshold: f64,
    },

    #[error("M exceeds alphabet size: M = {m}, |X| = {alphabet_size}")]
    MExceedsAlphabet { m: u64, alphabet_size: usize },

    #[error("partition construction needed {cells} cells but only M = {m} are allowed")]
    CellBudgetExceeded { cells: usize, m: u64 },

    #[error("rho must be a positive integer for factorial moments, got {0}")]
    NonIntegerRho(f64),

    #[error("rho must be positive for this operation, got {0}")]
    NonPositiveRho(f64),

    #[error("non-positive constant: {name} = {value}")]
    NonPositiveConstant { name: &'static str, value: f64 },

    #[error("trial count must be at least 1")]
    ZeroTrials,

    #[error("enumeration cap exceeded: {states} states > cap {cap}")]
    EnumerationCap { states: u128, cap: u64 },

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("boundary configuration rejected: {0}")]
    BoundaryConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
