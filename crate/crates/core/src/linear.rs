//! Linear divisors `dA = C/(x+D) dB`: the κ recursion, the transformed
//! recurrence and the connection `a_n = b_n + κ_n b_{n-1}`.

use crate::divisor::{DivisorSpec, Normalization};
use crate::error::{Error, Result};
use crate::measure::MeasureSpec;
use crate::quadrature::{integrate_adaptive_many, AdaptiveOptions};
use crate::recurrence::RecurrenceCoefficients;
use crate::scalar::{Backend, Scalar, DEFAULT_PRECISION};

/// `κ_1..κ_N` (and `λ_1..λ_N` for quadratic divisors, with `λ_1 = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionCoefficients {
    order: usize,
    kappa: Vec<Scalar>,
    lambda: Vec<Scalar>,
}

impl ConnectionCoefficients {
    pub fn linear(kappa: Vec<Scalar>) -> Self {
        Self {
            order: 1,
            kappa,
            lambda: Vec::new(),
        }
    }

    pub fn quadratic(kappa: Vec<Scalar>, lambda: Vec<Scalar>) -> Self {
        assert_eq!(kappa.len(), lambda.len(), "kappa and lambda must have equal length");
        Self {
            order: 2,
            kappa,
            lambda,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of computed indices `N`.
    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// `κ_n`, `n ≥ 1`.
    pub fn kappa(&self, n: usize) -> Result<&Scalar> {
        n.checked_sub(1)
            .and_then(|i| self.kappa.get(i))
            .ok_or(Error::InsufficientCoefficients {
                what: "kappa",
                index: n,
                available: self.kappa.len(),
            })
    }

    /// `λ_n`, `n ≥ 1`; zero for linear connections.
    pub fn lambda(&self, n: usize) -> Result<Scalar> {
        if self.order == 1 {
            return self.kappa(n).map(|k| k.int_like(0));
        }
        n.checked_sub(1)
            .and_then(|i| self.lambda.get(i))
            .cloned()
            .ok_or(Error::InsufficientCoefficients {
                what: "lambda",
                index: n,
                available: self.lambda.len(),
            })
    }

    pub fn kappas(&self) -> &[Scalar] {
        &self.kappa
    }

    pub fn lambdas(&self) -> &[Scalar] {
        &self.lambda
    }

    /// First `n` indices only.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            order: self.order,
            kappa: self.kappa.iter().take(n).cloned().collect(),
            lambda: self.lambda.iter().take(n).cloned().collect(),
        }
    }
}

/// Per-index monitors produced alongside `κ`.
#[derive(Clone, Debug)]
pub struct KappaDiagnostics {
    /// `|κ_n + β̂_{n-2}/κ_{n-1} - β_{n-1} - D|` relative to the largest term, `n ≥ 2`.
    pub conserved_residual: Vec<Scalar>,
    /// First-order estimate of the relative error of `κ_n`, `n ≥ 1`
    /// (zero in the rational backend).
    pub forward_error: Vec<f64>,
}

impl KappaDiagnostics {
    pub fn max_conserved_residual(&self) -> f64 {
        self.conserved_residual.iter().map(Scalar::to_f64).fold(0.0, f64::max)
    }
}

/// Tolerance used for normalizations: close to the working precision.
pub fn default_tolerance(precision: u32) -> f64 {
    2f64.powi(8 - precision as i32)
}

/// `C = 1 / ∫ dB/(x+D)`.
pub fn normalization_constant(rc: &RecurrenceCoefficients, measure: &MeasureSpec, d: &Scalar) -> Result<Scalar> {
    let precision = rc.backend().precision().unwrap_or(DEFAULT_PRECISION);
    let divisor = DivisorSpec::linear(Normalization::Auto, d.clone());
    normalization_for(measure, &divisor, &AdaptiveOptions::new(default_tolerance(precision), precision))
}

/// `C = 1 / ∫ dB/P(x)` for a divisor of any degree.
pub fn normalization_for(measure: &MeasureSpec, divisor: &DivisorSpec, opts: &AdaptiveOptions) -> Result<Scalar> {
    let unresolved = DivisorSpec {
        normalization: Normalization::Auto,
        kind: divisor.kind.clone(),
    };
    measure.check_divisor(&unresolved, opts.precision)?;
    let unit = measure.modified(&divisor.with_c(divisor.backend().one()))?;
    let f = |x: &Scalar| Ok(vec![x.int_like(1)]);
    let integral = integrate_adaptive_many(&unit, &f, &[], opts)?.remove(0);
    if integral.is_zero() {
        return Err(Error::InvalidDivisor("∫ dB/P vanishes".into()));
    }
    let c = integral.recip();
    measure.check_divisor(&divisor.with_c(c.clone()), opts.precision)?;
    Ok(c)
}

/// Resolves `C = auto` by quadrature; a given `C` is checked against the
/// quadrature value and a mismatch above `1e-8` is logged.
pub fn resolve_normalization(measure: &MeasureSpec, divisor: &DivisorSpec, opts: &AdaptiveOptions) -> Result<DivisorSpec> {
    match &divisor.normalization {
        Normalization::Auto => {
            let c = normalization_for(measure, divisor, opts)?;
            Ok(divisor.with_c(c))
        }
        Normalization::Given(c) => {
            measure.check_divisor(divisor, opts.precision)?;
            match normalization_for(measure, divisor, opts) {
                Ok(computed) => {
                    let rel = crate::scalar::relative_difference(c, &computed, &c.int_like(0)).to_f64();
                    if rel > 1e-8 {
                        log::warn!("given C = {} differs from quadrature value {} (relative {rel:.2e})", c.display_rounded(12), computed.display_rounded(12));
                    }
                }
                Err(e) => log::warn!("could not check C by quadrature: {e}"),
            }
            Ok(divisor.clone())
        }
    }
}

/// Checks `C/P ≥ 0` and that `P` does not vanish on the support.
pub fn validate_divisor(measure: &MeasureSpec, divisor: &DivisorSpec, precision: u32) -> Result<()> {
    measure.check_divisor(divisor, precision)
}

fn breakdown_threshold(backend: Backend, beta_hat: &Scalar) -> Option<Scalar> {
    backend.precision().map(|p| {
        let mut t = backend.one();
        for _ in 0..p / 2 {
            t = t / backend.int(2);
        }
        let scale = beta_hat.abs().max(backend.one());
        t * scale
    })
}

fn is_breakdown(value: &Scalar, threshold: &Option<Scalar>) -> bool {
    match threshold {
        None => value.is_zero(),
        Some(t) => value.abs() < *t,
    }
}

/// `κ_1 = β_0 + D - C`, `κ_n = β_{n-1} + D - β̂_{n-2}/κ_{n-1}` for `n = 2..=N`.
pub fn kappa_sequence(rc: &RecurrenceCoefficients, divisor: &DivisorSpec, n: usize) -> Result<ConnectionCoefficients> {
    kappa_sequence_with_diagnostics(rc, divisor, n).map(|(cc, _)| cc)
}

/// [`kappa_sequence`] plus the stability monitors.
///
/// Fails with `PrecisionExhausted` when either the conserved-quantity residual
/// or the propagated forward-error estimate exceeds `2^{-p/4}`.
pub fn kappa_sequence_with_diagnostics(
    rc: &RecurrenceCoefficients,
    divisor: &DivisorSpec,
    n: usize,
) -> Result<(ConnectionCoefficients, KappaDiagnostics)> {
    assert!(n >= 1, "need at least one kappa");
    let d = divisor.linear_shift()?;
    let c = divisor.c()?;
    let backend = rc.backend().join(divisor.backend());
    let d = d.to_backend(backend)?;
    let c = c.to_backend(backend)?;
    let eps = backend.precision().map(|p| 2f64.powi(-(p as i32)));
    let limit = backend.precision().map(|p| 2f64.powi(-(p as i32) / 4));

    let beta0 = rc.beta(0)?.to_backend(backend)?;
    let mut kappa = vec![&beta0 + &d - &c];
    let mut residuals = Vec::new();
    let mut forward = Vec::new();
    let mut abs_err = eps.map_or(0.0, |e| 4.0 * e * (beta0.abs().to_f64() + d.abs().to_f64() + c.abs().to_f64()));
    forward.push(relative(abs_err, &kappa[0]));

    for m in 2..=n {
        let prev = &kappa[m - 2];
        let beta_hat = rc.beta_hat(m - 2)?.to_backend(backend)?;
        let beta = rc.beta(m - 1)?.to_backend(backend)?;
        if is_breakdown(prev, &breakdown_threshold(backend, &beta_hat)) {
            return Err(Error::RegularityBreakdown {
                what: "kappa",
                index: m,
                magnitude: prev.abs().display_rounded(6),
            });
        }
        let ratio = &beta_hat / prev;
        let next = &beta + &d - &ratio;

        let residual = {
            let r = (&next + &ratio - &beta - &d).abs();
            let scale = next.abs().max(ratio.abs()).max(beta.abs()).max(d.abs());
            if scale.is_zero() {
                r
            } else {
                r / scale
            }
        };
        if let Some(e) = eps {
            let gain = (ratio.abs() / prev.abs()).to_f64();
            abs_err = gain * abs_err + 4.0 * e * (beta.abs().to_f64() + d.abs().to_f64() + ratio.abs().to_f64());
        }
        let fe = relative(abs_err, &next);
        if let Some(limit) = limit {
            if residual.to_f64() > limit || fe > limit {
                return Err(Error::PrecisionExhausted {
                    index: m,
                    residual: format!("{:.3e}", residual.to_f64().max(fe)),
                    threshold: format!("{limit:.3e}"),
                });
            }
        }
        residuals.push(residual);
        forward.push(fe);
        kappa.push(next);
    }
    Ok((
        ConnectionCoefficients::linear(kappa),
        KappaDiagnostics {
            conserved_residual: residuals,
            forward_error: forward,
        },
    ))
}

fn relative(abs_err: f64, value: &Scalar) -> f64 {
    let v = value.abs().to_f64();
    if abs_err == 0.0 {
        0.0
    } else if v == 0.0 {
        f64::INFINITY
    } else {
        abs_err / v
    }
}

/// Residuals `κ_n + β̂_{n-2}/κ_{n-1} - β_{n-1} - D` for `n = 2..=N`, unscaled.
pub fn conserved_residuals(rc: &RecurrenceCoefficients, cc: &ConnectionCoefficients, d: &Scalar) -> Result<Vec<Scalar>> {
    (2..=cc.len())
        .map(|m| {
            let prev = cc.kappa(m - 1)?;
            let ratio = rc.beta_hat(m - 2)?.checked_div(prev).ok_or(Error::RegularityBreakdown {
                what: "kappa",
                index: m,
                magnitude: "0".into(),
            })?;
            Ok(cc.kappa(m)? + ratio - rc.beta(m - 1)? - d)
        })
        .collect()
}

/// The recurrence of the `a_n`: `α_0..α_{N-1}` and `α̂_0..α̂_{N-1}` from `κ_1..κ_N`.
pub fn transformed_recurrence(rc: &RecurrenceCoefficients, cc: &ConnectionCoefficients) -> Result<RecurrenceCoefficients> {
    if cc.order() != 1 {
        return Err(Error::InvalidDivisor("transformed_recurrence needs a linear connection".into()));
    }
    let n = cc.len();
    if n < 2 {
        return Err(Error::InsufficientCoefficients {
            what: "kappa",
            index: 2,
            available: n,
        });
    }
    let mut alpha = Vec::with_capacity(n);
    alpha.push(rc.beta(0)? - cc.kappa(1)?);
    for m in 1..n {
        alpha.push(rc.beta(m)? + cc.kappa(m)? - cc.kappa(m + 1)?);
    }
    let mut alpha_hat = Vec::with_capacity(n);
    let (k1, k2) = (cc.kappa(1)?, cc.kappa(2)?);
    alpha_hat.push(rc.beta_hat(0)? + k1 * (rc.beta(0)? + k2 - rc.beta(1)? - k1));
    for m in 2..=n {
        let prev = cc.kappa(m - 1)?;
        let ratio = cc.kappa(m)? / prev;
        alpha_hat.push(ratio * rc.beta_hat(m - 2)?);
    }
    check_positive(&alpha_hat)?;
    RecurrenceCoefficients::from_tables(alpha, alpha_hat)
}

pub(crate) fn check_positive(alpha_hat: &[Scalar]) -> Result<()> {
    for (index, v) in alpha_hat.iter().enumerate() {
        if !v.is_positive() {
            return Err(Error::PositivityViolation {
                what: "alpha_hat",
                index,
                value: v.display_rounded(12),
            });
        }
    }
    Ok(())
}

/// `a_n(x) = b_n(x) + κ_n b_{n-1}(x) (+ λ_n b_{n-2}(x))`.
pub fn apply_connection(rc: &RecurrenceCoefficients, cc: &ConnectionCoefficients, n: usize, x: &Scalar) -> Result<Scalar> {
    let b = rc.eval_monic_sequence(n, x)?;
    connect(cc, &b, n)
}

/// `a_0(x), ..., a_n(x)`.
pub fn apply_connection_sequence(
    rc: &RecurrenceCoefficients,
    cc: &ConnectionCoefficients,
    n: usize,
    x: &Scalar,
) -> Result<Vec<Scalar>> {
    let b = rc.eval_monic_sequence(n, x)?;
    (0..=n).map(|m| connect(cc, &b, m)).collect()
}

fn connect(cc: &ConnectionCoefficients, b: &[Scalar], n: usize) -> Result<Scalar> {
    if n == 0 {
        return Ok(b[0].clone());
    }
    let mut value = &b[n] + cc.kappa(n)? * &b[n - 1];
    if cc.order() == 2 && n >= 2 {
        value = value + cc.lambda(n)? * &b[n - 2];
    }
    Ok(value)
}

/// Monomial coefficients (constant first) of `a_n`.
pub fn connection_monomials(rc: &RecurrenceCoefficients, cc: &ConnectionCoefficients, n: usize) -> Result<Vec<Scalar>> {
    let polys = rc.monomial_coefficients(n)?;
    let mut out = polys[n].clone();
    if n >= 1 {
        let k = cc.kappa(n)?;
        for (i, c) in polys[n - 1].iter().enumerate() {
            out[i] = &out[i] + k * c;
        }
    }
    if n >= 2 && cc.order() == 2 {
        let l = cc.lambda(n)?;
        for (i, c) in polys[n - 2].iter().enumerate() {
            out[i] = &out[i] + &l * c;
        }
    }
    Ok(out)
}
