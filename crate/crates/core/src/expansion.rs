//! Inversion of the linear connection and the `b_n` expansion of `C/(x+D)`.

use crate::divisor::DivisorSpec;
use crate::error::{Error, Result};
use crate::linear::ConnectionCoefficients;
use crate::measure::MeasureSpec;
use crate::quadrature::{integrate_adaptive_many, AdaptiveOptions};
use crate::recurrence::RecurrenceCoefficients;
use crate::scalar::Scalar;

fn require_linear(cc: &ConnectionCoefficients) -> Result<()> {
    if cc.order() != 1 {
        return Err(Error::InvalidDivisor("expansion is only defined for linear divisors".into()));
    }
    Ok(())
}

/// `c_j = (-1)^j κ_{n-j+1} ⋯ κ_n` for `j = 0..n`, so that
/// `b_n = Σ_j c_j a_{n-j}`.
pub fn inversion_coefficients(cc: &ConnectionCoefficients, n: usize) -> Result<Vec<Scalar>> {
    require_linear(cc)?;
    let mut out = Vec::with_capacity(n + 1);
    let one = match cc.kappas().first() {
        Some(k) => k.int_like(1),
        None if n == 0 => return Ok(vec![crate::scalar::Backend::Rational.one()]),
        None => {
            return Err(Error::InsufficientCoefficients {
                what: "kappa",
                index: n,
                available: 0,
            })
        }
    };
    out.push(one);
    for j in 1..=n {
        let next = -(&out[j - 1] * cc.kappa(n - j + 1)?);
        out.push(next);
    }
    Ok(out)
}

/// `b_n(x)` rebuilt from `a_0(x), ..., a_n(x)`.
pub fn invert(cc: &ConnectionCoefficients, a_values: &[Scalar], n: usize) -> Result<Scalar> {
    let c = inversion_coefficients(cc, n)?;
    Ok(c.iter()
        .enumerate()
        .fold(a_values[n].int_like(0), |acc, (j, cj)| acc + cj * &a_values[n - j]))
}

/// `f_0 = 1`, `f_n = -f_{n-1} κ_n / β̂_{n-1}`.
pub fn fourier_coefficients(cc: &ConnectionCoefficients, rc: &RecurrenceCoefficients, n: usize) -> Result<Vec<Scalar>> {
    require_linear(cc)?;
    let one = cc.kappas().first().map_or_else(|| rc.backend().one(), |k| k.int_like(1));
    let mut out = vec![one];
    for m in 1..=n {
        let beta_hat = rc.beta_hat(m - 1)?;
        let next = -(&out[m - 1] * cc.kappa(m)?) / beta_hat;
        out.push(next);
    }
    Ok(out)
}

/// `Σ_{n=0}^{N} f_n b_n(x)`.
pub fn evaluate_partial_sum(rc: &RecurrenceCoefficients, f: &[Scalar], n: usize, x: &Scalar) -> Result<Scalar> {
    if f.len() <= n {
        return Err(Error::InsufficientCoefficients {
            what: "fourier",
            index: n,
            available: f.len(),
        });
    }
    let b = rc.eval_monic_sequence(n, x)?;
    Ok(f.iter().zip(&b).fold(f[0].int_like(0), |acc, (fi, bi)| acc + fi * bi))
}

/// Partial sums of `Σ t_n log² n` with `t_n = f_n² ‖b_n‖²`.
#[derive(Clone, Debug)]
pub struct SummabilityReport {
    pub partial_sums: Vec<f64>,
    /// Heuristic: the last term, scaled by `N`, is under 1% of the sum.
    pub appears_convergent: bool,
}

#[derive(Clone, Debug)]
pub struct ParsevalReport {
    /// `S_N = Σ_{n=0}^{N} f_n² ‖b_n‖²` for `N = 0..`.
    pub partial_sums: Vec<Scalar>,
    /// `C² ∫ dB/P²`.
    pub rhs: Scalar,
    /// `|S_N - rhs|` at the last `N`.
    pub residual: Scalar,
    pub summability: SummabilityReport,
}

impl ParsevalReport {
    pub fn is_monotone(&self) -> bool {
        self.partial_sums.windows(2).all(|w| w[1] >= w[0])
    }
}

/// `C² ∫ dB/P²`, computed by integrating 1 against `dA` modified once more by `P`.
pub fn second_moment(measure: &MeasureSpec, divisor: &DivisorSpec, opts: &AdaptiveOptions) -> Result<Scalar> {
    let twice = measure.modified(divisor)?.modified(divisor)?;
    let f = |x: &Scalar| Ok(vec![x.int_like(1)]);
    Ok(integrate_adaptive_many(&twice, &f, &[], opts)?.remove(0))
}

/// Parseval partial sums for `f_0..f_N` against the second moment of `C/P`.
pub fn parseval_residual(
    rc: &RecurrenceCoefficients,
    cc: &ConnectionCoefficients,
    divisor: &DivisorSpec,
    measure: &MeasureSpec,
    n: usize,
    opts: &AdaptiveOptions,
) -> Result<ParsevalReport> {
    let f = fourier_coefficients(cc, rc, n)?;
    let norms = rc.squared_norms(n)?;
    let rhs = second_moment(measure, divisor, opts)?;
    let mut partial_sums = Vec::with_capacity(n + 1);
    let mut acc = f[0].int_like(0);
    let mut weighted = Vec::with_capacity(n + 1);
    let mut wacc = 0.0;
    let mut last_term = 0.0;
    for (m, (fm, h)) in f.iter().zip(&norms).enumerate() {
        let term = fm.square() * h;
        let log = (m.max(1) as f64).ln();
        last_term = term.to_f64() * log * log;
        wacc += last_term;
        weighted.push(wacc);
        acc = acc + term;
        partial_sums.push(acc.clone());
    }
    let residual = (&acc - &rhs).abs();
    let appears_convergent = wacc.is_finite() && (n as f64) * last_term <= 0.01 * wacc.max(f64::MIN_POSITIVE);
    Ok(ParsevalReport {
        partial_sums,
        rhs,
        residual,
        summability: SummabilityReport {
            partial_sums: weighted,
            appears_convergent,
        },
    })
}
