use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library reports. Validation variants are kept distinct
/// so callers (and the CLI exit-code mapping) can tell them apart.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("zeta must lie in (0, 1/2), got {0}")]
    ZetaOutOfRange(f64),
    #[error("d must be an integer >= 2, got {0}")]
    DegreeTooSmall(u32),
    #[error("delta = 4*sqrt(ln(1/zeta))/d must be < 1, got {0}")]
    DeltaNotBelowOne(f64),
    #[error("epsilon must be positive and finite, got {0}")]
    EpsilonNotPositive(f64),
    #[error("epsilon must satisfy epsilon < delta/8 (epsilon = {epsilon}, delta/8 = {limit})")]
    EpsilonTooLarge { epsilon: f64, limit: f64 },
    #[error("truncation n_max = {n_max} keeps only n_max*delta = {reach} < 10")]
    TruncationTooShort { n_max: u32, reach: f64 },

    #[error("eta out of range (0, 1/2], got {0}")]
    EtaOutOfRange(f64),
    #[error("zeta must satisfy 0 < zeta <= eta, got zeta = {zeta}, eta = {eta}")]
    ZetaAboveEta { zeta: f64, eta: f64 },
    #[error("infeasible plan: {0}")]
    Infeasible(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("moment order {t} exceeds the supported maximum {max}")]
    MomentOrderTooLarge { t: usize, max: usize },

    #[error("direction must be a unit vector (norm = {0})")]
    NonUnitDirection(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("marginal density vanishes at projection {0}; flipping probability undefined")]
    ZeroMarginalDensity(f64),
    #[error("intervals overlap or are unsorted near {0}")]
    OverlappingIntervals(f64),
    #[error("interval union is empty")]
    EmptyIntervals,

    #[error("monomial basis of size {size} exceeds the cap {cap}")]
    BasisTooLarge { size: u128, cap: u128 },
    #[error("polynomial degree {degree} exceeds basis degree {max}")]
    DegreeOverflow { degree: usize, max: usize },
    #[error("ambient dimension {ambient} is smaller than the lifted dimension {lifted}")]
    AmbientTooSmall { ambient: usize, lifted: usize },

    #[error("query budget of {0} queries exhausted")]
    BudgetExhausted(usize),
    #[error(
        "near-orthogonal generation gave up after {tries} tries with {accepted}/{target} vectors \
         (per-pair failure bound {pair_bound:.3e})"
    )]
    DirectionsExhausted {
        tries: usize,
        accepted: usize,
        target: usize,
        pair_bound: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// True for errors caused by invalid or infeasible input (as opposed to
    /// runtime conditions such as an exhausted budget).
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::BudgetExhausted(_) | Error::DirectionsExhausted { .. } | Error::ZeroMarginalDensity(_)
        )
    }
}
