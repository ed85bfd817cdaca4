use thiserror::Error;

use crate::ordinal::OrdinalAddress;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("address {0} is the supremum and has no successor")]
    AddressAtSup(OrdinalAddress),
    #[error("address {0} does not belong to the index set")]
    InvalidAddress(OrdinalAddress),
    #[error("address {0} lies beyond the enumeration horizon")]
    BeyondHorizon(OrdinalAddress),
    #[error("point {0} lies outside the index set's range")]
    OutOfRange(f64),
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("no convergence at limit position {at} within the iteration budget")]
    NotConvergent { at: OrdinalAddress },
    #[error("remainder bound {residual:e} exceeds tolerance {tol:e} at limit position {at}")]
    ToleranceUnachievable { at: OrdinalAddress, residual: f64, tol: f64 },
    #[error("family is not summable below {cutoff}")]
    NotLocallySummable { cutoff: OrdinalAddress },
    #[error("mapping is not integrable beyond {cutoff}")]
    NotLocallyIntegrable { cutoff: f64 },
    #[error("oscillation oracle cannot certify progress at x = {x}")]
    NoProgress { x: f64 },
    #[error("knot budget {budget} exhausted at x = {reached}")]
    BudgetExceeded { budget: usize, reached: f64 },
    #[error("bisection depth {0} exceeded")]
    DepthExceeded(usize),
    #[error("iteration budget {iterations} exhausted with gap {gap:e}")]
    MaxIterExceeded { iterations: usize, gap: f64 },
    #[error("monotonicity violated at iteration {iteration}, t = {t}")]
    MonotonicityViolation { iteration: usize, t: f64 },
    #[error("unknown gallery id {0:?}")]
    UnknownId(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
