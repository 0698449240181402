//! Reciprocal-polynomial density ratios `dA/dB = C / P(x)`.

use crate::error::{Error, Result};
use crate::scalar::{Backend, Scalar};

/// How the constant `C` is obtained.
#[derive(Clone, Debug)]
pub enum Normalization {
    Given(Scalar),
    /// Computed from `∫ dA = 1` by quadrature.
    Auto,
}

#[derive(Clone, Debug)]
pub enum DivisorKind {
    /// `P(x) = x + D`
    Linear { d: Scalar },
    /// `P(x) = x² + D x + E`
    Quadratic { d: Scalar, e: Scalar },
    /// `P(x) = x^r + p_{r-1} x^{r-1} + ... + p_0`, lower coefficients constant-first.
    Monic { lower: Vec<Scalar> },
}

#[derive(Clone, Debug)]
pub struct DivisorSpec {
    pub normalization: Normalization,
    pub kind: DivisorKind,
}

impl DivisorSpec {
    pub fn linear(normalization: Normalization, d: Scalar) -> Self {
        Self {
            normalization,
            kind: DivisorKind::Linear { d },
        }
    }

    pub fn quadratic(normalization: Normalization, d: Scalar, e: Scalar) -> Self {
        Self {
            normalization,
            kind: DivisorKind::Quadratic { d, e },
        }
    }

    /// Arbitrary-degree monic divisor; only the quadrature oracle handles degree ≥ 3.
    pub fn monic(normalization: Normalization, lower: Vec<Scalar>) -> Self {
        assert!(!lower.is_empty(), "divisor degree must be at least 1");
        Self {
            normalization,
            kind: DivisorKind::Monic { lower },
        }
    }

    /// Kesten–McKay modification of the semicircle law:
    /// `C = (1-ρ²)/ρ²`, `D = -(1+ρ²) y / ρ`, `E = ((1-ρ²)/ρ)² + y²`.
    pub fn kesten_mckay(rho: &Scalar, y: &Scalar) -> Result<Self> {
        let one = rho.int_like(1);
        let rho2 = rho.square();
        if rho.is_zero() || rho2 >= one {
            return Err(Error::InvalidDivisor(format!(
                "Kesten–McKay needs 0 < |rho| < 1, got {rho}"
            )));
        }
        let c = (&one - &rho2) / &rho2;
        let d = -((&one + &rho2) * y) / rho;
        let e = ((&one - &rho2) / rho).square() + y.square();
        Ok(Self::quadratic(Normalization::Given(c), d, e))
    }

    pub fn degree(&self) -> usize {
        match &self.kind {
            DivisorKind::Linear { .. } => 1,
            DivisorKind::Quadratic { .. } => 2,
            DivisorKind::Monic { lower } => lower.len(),
        }
    }

    pub fn c(&self) -> Result<&Scalar> {
        match &self.normalization {
            Normalization::Given(c) => Ok(c),
            Normalization::Auto => Err(Error::UnresolvedNormalization),
        }
    }

    pub fn is_resolved(&self) -> bool {
        matches!(self.normalization, Normalization::Given(_))
    }

    pub fn with_c(&self, c: Scalar) -> Self {
        Self {
            normalization: Normalization::Given(c),
            kind: self.kind.clone(),
        }
    }

    /// `D` of a linear divisor.
    pub fn linear_shift(&self) -> Result<&Scalar> {
        match &self.kind {
            DivisorKind::Linear { d } => Ok(d),
            _ => Err(Error::InvalidDivisor(format!(
                "expected a linear divisor, got degree {}",
                self.degree()
            ))),
        }
    }

    /// `(D, E)` of a quadratic divisor.
    pub fn quadratic_coefficients(&self) -> Result<(&Scalar, &Scalar)> {
        match &self.kind {
            DivisorKind::Quadratic { d, e } => Ok((d, e)),
            _ => Err(Error::InvalidDivisor(format!(
                "expected a quadratic divisor, got degree {}",
                self.degree()
            ))),
        }
    }

    /// Monic coefficients of `P`, constant term first (the last entry is 1).
    pub fn coefficients(&self) -> Vec<Scalar> {
        match &self.kind {
            DivisorKind::Linear { d } => vec![d.clone(), d.int_like(1)],
            DivisorKind::Quadratic { d, e } => vec![e.clone(), d.clone(), d.int_like(1)],
            DivisorKind::Monic { lower } => {
                let mut c = lower.clone();
                c.push(lower[0].int_like(1));
                c
            }
        }
    }

    pub fn backend(&self) -> Backend {
        let mut b = self
            .coefficients()
            .iter()
            .fold(Backend::Rational, |acc, s| acc.join(s.backend()));
        if let Normalization::Given(c) = &self.normalization {
            b = b.join(c.backend());
        }
        b
    }

    /// `P(x)`.
    pub fn polynomial(&self, x: &Scalar) -> Scalar {
        crate::recurrence::horner(&self.coefficients(), x)
    }

    /// `C / P(x)`; a vanishing `P(x)` is reported as a singular integrand.
    pub fn ratio(&self, x: &Scalar) -> Result<Scalar> {
        let c = self.c()?;
        let p = self.polynomial(x);
        c.checked_div(&p)
            .filter(Scalar::is_finite)
            .ok_or_else(|| Error::IntegrandSingular(x.to_string()))
    }

    /// `C/P(x)` for `x` inside `[lo, hi]` with `from_lo = x - lo` and
    /// `to_hi = hi - x` known more accurately than `x` itself. Factors
    /// `x - r` with `r` an endpoint are replaced by the matching distance.
    pub fn ratio_near(&self, x: &Scalar, lo: &Scalar, hi: &Scalar, from_lo: &Scalar, to_hi: &Scalar, precision: u32) -> Result<Scalar> {
        let roots = match self.real_roots(precision)? {
            Some(r) if !r.is_empty() => r,
            _ => return self.ratio(x),
        };
        let touches = |r: &Scalar, e: &Scalar| {
            let gap = (r - e).abs().to_f64();
            gap <= 2f64.powi(4 - precision as i32) * e.abs().to_f64().max(1.0)
        };
        if !roots.iter().any(|r| touches(r, lo) || touches(r, hi)) {
            return self.ratio(x);
        }
        let mut p = x.int_like(1);
        for r in &roots {
            let factor = if touches(r, hi) {
                -to_hi.clone()
            } else if touches(r, lo) {
                from_lo.clone()
            } else {
                x - r
            };
            p = p * factor;
        }
        if roots.len() < self.degree() {
            // double root reported once
            let r = &roots[0];
            p = p * if touches(r, hi) { -to_hi.clone() } else if touches(r, lo) { from_lo.clone() } else { x - r };
        }
        self.c()?
            .checked_div(&p)
            .filter(Scalar::is_finite)
            .ok_or_else(|| Error::IntegrandSingular(x.to_string()))
    }

    /// Real roots of `P` in increasing order, if they can be found in closed form.
    ///
    /// Returns `Ok(None)` for monic divisors of degree ≥ 3. Square roots are
    /// taken at `precision` bits when the coefficients are rational.
    pub fn real_roots(&self, precision: u32) -> Result<Option<Vec<Scalar>>> {
        match &self.kind {
            DivisorKind::Linear { d } => Ok(Some(vec![-d])),
            DivisorKind::Quadratic { d, e } => {
                let disc = d.square() - e.int_like(4) * e;
                if disc.signum() < 0 {
                    return Ok(Some(Vec::new()));
                }
                let two = d.int_like(2);
                if disc.is_zero() {
                    return Ok(Some(vec![-d / &two]));
                }
                let root = disc
                    .to_backend(disc.backend().float_or(precision))?
                    .sqrt()?;
                let r1 = (-d - &root) / &two;
                let r2 = (-d + &root) / &two;
                Ok(Some(vec![r1, r2]))
            }
            DivisorKind::Monic { .. } => Ok(None),
        }
    }
}
