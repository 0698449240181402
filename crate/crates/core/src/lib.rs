//! Orthogonal polynomials for measures modified by reciprocal polynomials.
//!
//! Given the monic recurrence of a measure `dB` and a divisor `P`, the crate
//! computes the connection coefficients and the recurrence of the family
//! orthogonal with respect to `dA = C/P(x) dB`, for `P` linear or quadratic,
//! together with the Fourier expansion of `C/P` in the `dB` family and an
//! independent quadrature oracle.

pub mod catalog;
pub mod cli;
pub mod divisor;
pub mod error;
pub mod expansion;
pub mod linear;
pub mod measure;
pub mod oracle;
pub mod quadratic;
pub mod quadrature;
pub mod recurrence;
pub mod scalar;

pub use catalog::FamilySpec;
pub use divisor::{DivisorKind, DivisorSpec, Normalization};
pub use error::{Error, Result};
pub use linear::ConnectionCoefficients;
pub use measure::MeasureSpec;
pub use quadrature::QuadratureRule;
pub use recurrence::RecurrenceCoefficients;
pub use scalar::{Backend, Scalar};
