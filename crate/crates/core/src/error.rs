use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures raised by the recurrence, quadrature and transform routines.
///
/// Indices carried by the variants use the same numbering as the coefficient
/// being computed (`kappa[n]`, `lambda[n]`, `beta_hat[k]`, ...).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coefficient sequence exhausted: {what}[{index}] requested, {available} available")]
    InsufficientCoefficients {
        what: &'static str,
        index: usize,
        available: usize,
    },

    #[error("operation `{0}` needs the floating-point backend")]
    BackendUnsupported(&'static str),

    #[error("positivity violated: {what}[{index}] = {value} is not > 0")]
    PositivityViolation {
        what: &'static str,
        index: usize,
        value: String,
    },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("no closed form in the catalog for {0}")]
    NoClosedForm(String),

    #[error("tridiagonal eigensolver did not converge (dimension {dimension}, eigenvalue {index})")]
    EigenFailure { dimension: usize, index: usize },

    #[error("integrand is not finite at x = {0}")]
    IntegrandSingular(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureDivergent(String),

    #[error("invalid divisor: {0}")]
    InvalidDivisor(String),

    #[error("regularity breakdown: {what}[{index}] vanished (|value| = {magnitude})")]
    RegularityBreakdown {
        what: &'static str,
        index: usize,
        magnitude: String,
    },

    #[error(
        "precision exhausted at index {index}: invariant residual {residual} exceeds {threshold}; \
         rerun with a larger precision"
    )]
    PrecisionExhausted {
        index: usize,
        residual: String,
        threshold: String,
    },

    #[error("recurrence is not symmetric: beta[{index}] = {value} is not 0")]
    NotSymmetric { index: usize, value: String },

    #[error("divisor cannot be split into real linear factors: {0}")]
    FactorizationUnavailable(String),

    #[error("oracle linear system is singular: {0}")]
    OracleSingular(String),

    #[error("divisor normalization C is still `auto`; resolve it first")]
    UnresolvedNormalization,

    #[error("invalid number `{0}`")]
    InvalidNumber(String),
}
