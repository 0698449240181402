//! Quadratic divisors `dA = C/(x² + Dx + E) dB`, where
//! `a_n = b_n + κ_n b_{n-1} + λ_n b_{n-2}`.

use crate::divisor::{DivisorSpec, Normalization};
use crate::error::{Error, Result};
use crate::linear::{check_positive, kappa_sequence, resolve_normalization, transformed_recurrence, ConnectionCoefficients};
use crate::measure::MeasureSpec;
use crate::oracle::direct_connection_table;
use crate::quadrature::AdaptiveOptions;
use crate::recurrence::RecurrenceCoefficients;
use crate::scalar::{relative_difference, Backend, Scalar, DEFAULT_PRECISION};

fn breakdown(value: &Scalar, reference: &Scalar) -> bool {
    match value.backend().precision() {
        None => value.is_zero(),
        Some(p) => {
            let scale = reference.abs().to_f64().max(1.0);
            value.is_zero() || value.abs().to_f64() < 2f64.powi(-(p as i32) / 2) * scale
        }
    }
}

/// `λ_1..λ_N` for a symmetric recurrence (`β ≡ 0`) and `P = x² + E`:
/// `λ_2 = β̂_0 + E - C`, `λ_3 = β̂_1 + E - E β̂_0/(C - E)` and
/// `λ_{n+1} = λ_n + β̂_{n-1} - (λ_n/λ_{n-1}) β̂_{n-3}`.
pub fn symmetric_lambda_sequence(rc: &RecurrenceCoefficients, c: &Scalar, e: &Scalar, n: usize) -> Result<ConnectionCoefficients> {
    assert!(n >= 1, "need at least one index");
    for k in 0..n {
        let beta = rc.beta(k)?;
        if !beta.is_zero() {
            return Err(Error::NotSymmetric {
                index: k,
                value: beta.display_rounded(12),
            });
        }
    }
    if c == e {
        return Err(Error::InvalidDivisor("C = E makes the symmetric recursion undefined".into()));
    }
    let backend = rc.backend().join(c.backend()).join(e.backend());
    let c = c.to_backend(backend)?;
    let e = e.to_backend(backend)?;
    let bh = |k: usize| -> Result<Scalar> { rc.beta_hat(k)?.to_backend(backend) };

    let mut lambda = vec![backend.zero()];
    if n >= 2 {
        lambda.push(bh(0)? + &e - &c);
    }
    if n >= 3 {
        lambda.push(bh(1)? + &e - &e * bh(0)? / (&c - &e));
    }
    for m in 3..n {
        let (prev, last) = (&lambda[m - 2], &lambda[m - 1]);
        let beta_hat = bh(m - 3)?;
        if breakdown(prev, &beta_hat) {
            return Err(Error::RegularityBreakdown {
                what: "lambda",
                index: m - 1,
                magnitude: prev.abs().display_rounded(6),
            });
        }
        let next = last + bh(m - 1)? - last / prev * beta_hat;
        lambda.push(next);
    }
    Ok(ConnectionCoefficients::quadratic(vec![backend.zero(); n], lambda))
}

/// `α ≡ 0`, `α̂_{n-1} = β̂_{n-1} + λ_n - λ_{n+1}` for `n = 1..N-1`.
pub fn symmetric_transformed_recurrence(rc: &RecurrenceCoefficients, cc: &ConnectionCoefficients) -> Result<RecurrenceCoefficients> {
    let n = cc.len();
    if n < 2 {
        return Err(Error::InsufficientCoefficients {
            what: "lambda",
            index: 2,
            available: n,
        });
    }
    let mut alpha_hat = Vec::with_capacity(n - 1);
    for m in 1..n {
        alpha_hat.push(rc.beta_hat(m - 1)? + cc.lambda(m)? - cc.lambda(m + 1)?);
    }
    check_positive(&alpha_hat)?;
    let zero = alpha_hat[0].int_like(0);
    RecurrenceCoefficients::from_tables(vec![zero; n], alpha_hat)
}

/// Relative differences between `α̂_{n-1}` and the ratio form
/// `λ_n β̂_{n-3}/λ_{n-1}`, for `n ≥ 3` where `λ_{n-1} ≠ 0`.
pub fn symmetric_ratio_check(rc: &RecurrenceCoefficients, cc: &ConnectionCoefficients, target: &RecurrenceCoefficients) -> Result<Vec<Scalar>> {
    let mut out = Vec::new();
    for m in 3..cc.len() {
        let prev = cc.lambda(m - 1)?;
        if prev.is_zero() {
            continue;
        }
        let ratio = cc.lambda(m)? * rc.beta_hat(m - 3)? / prev;
        let primary = target.beta_hat(m - 1)?;
        out.push(relative_difference(&primary, &ratio, &primary.int_like(0)));
    }
    Ok(out)
}

/// Forward scheme on the system relating `(κ, λ)` to `(α, α̂)`.
///
/// `κ_1..κ_3`, `λ_2, λ_3` come from the Gram-system oracle; from `n = 3` on
///
/// ```text
/// α̂_{n-1} = λ_n β̂_{n-3} / λ_{n-1}
/// α_n     = (κ_n β̂_{n-2} + λ_n β_{n-2} - α̂_{n-1} κ_{n-1}) / λ_n
/// κ_{n+1} = β_n + κ_n - α_n
/// λ_{n+1} = β̂_{n-1} + κ_n β_{n-1} + λ_n - α_n κ_n - α̂_{n-1}
/// ```
///
/// Returns `κ_1..κ_N`, `λ_1..λ_N` and `α_0..α_{N-1}`, `α̂_0..α̂_{N-1}`.
pub fn general_quadratic_sequence(
    rc: &RecurrenceCoefficients,
    measure: &MeasureSpec,
    divisor: &DivisorSpec,
    n: usize,
    opts: &AdaptiveOptions,
) -> Result<(ConnectionCoefficients, RecurrenceCoefficients)> {
    divisor.quadratic_coefficients()?;
    let divisor = resolve_normalization(measure, divisor, opts)?;
    let b = Backend::float(opts.precision).join(rc.backend());
    let total = n.max(3);
    let rcf = rc.materialize(total + 1, b)?;
    let beta = |k: usize| rcf.beta(k);
    let beta_hat = |k: usize| rcf.beta_hat(k);

    let boot = direct_connection_table(rc, measure, &divisor, 2, 3, opts)?;
    let mut kappa = vec![boot[0][0].clone(), boot[1][0].clone(), boot[2][0].clone()];
    let mut lambda = vec![b.zero(), boot[1][1].clone(), boot[2][1].clone()];

    let mut alpha = vec![beta(0)? - &kappa[0], beta(1)? + &kappa[0] - &kappa[1]];
    let mut alpha_hat = vec![beta_hat(0)? + &kappa[0] * beta(0)? - &lambda[1] - &alpha[1] * &kappa[0]];
    alpha.push(beta(2)? + &kappa[1] - &kappa[2]);
    alpha_hat.push(beta_hat(1)? + &kappa[1] * beta(1)? + &lambda[1] - &lambda[2] - &alpha[2] * &kappa[1]);

    // index helpers: kappa[k-1] = κ_k, lambda[k-1] = λ_k
    for m in 3..=total {
        let (k_n, k_prev) = (kappa[m - 1].clone(), kappa[m - 2].clone());
        let (l_n, l_prev) = (lambda[m - 1].clone(), lambda[m - 2].clone());
        let bh3 = beta_hat(m - 3)?;
        if breakdown(&l_prev, &bh3) {
            return Err(Error::RegularityBreakdown {
                what: "lambda",
                index: m - 1,
                magnitude: l_prev.abs().display_rounded(6),
            });
        }
        let ah = &l_n * &bh3 / &l_prev;
        alpha_hat.push(ah.clone());
        if m == total {
            break;
        }
        if breakdown(&l_n, &bh3) {
            return Err(Error::RegularityBreakdown {
                what: "lambda",
                index: m,
                magnitude: l_n.abs().display_rounded(6),
            });
        }
        let a = (&k_n * beta_hat(m - 2)? + &l_n * beta(m - 2)? - &ah * &k_prev) / &l_n;
        let k_next = beta(m)? + &k_n - &a;
        let l_next = beta_hat(m - 1)? + &k_n * beta(m - 1)? + &l_n - &a * &k_n - &ah;
        alpha.push(a);
        kappa.push(k_next);
        lambda.push(l_next);
    }
    kappa.truncate(n);
    lambda.truncate(n);
    alpha.truncate(n);
    alpha_hat.truncate(n);
    check_positive(&alpha_hat)?;
    let cc = ConnectionCoefficients::quadratic(kappa, lambda);
    let target = RecurrenceCoefficients::from_tables(alpha, alpha_hat)?;
    Ok((cc, target))
}

/// Result of [`compose_linear_factors`].
#[derive(Clone, Debug)]
pub struct Composition {
    pub connection: ConnectionCoefficients,
    pub recurrence: RecurrenceCoefficients,
    /// `(C_1, D_1)` and `(C_2, D_2)` of the two linear stages.
    pub stages: [(Scalar, Scalar); 2],
    /// `C_1 C_2`, the normalization implied by the stages.
    pub normalization: Scalar,
}

/// Splits `P = (x + r_1)(x + r_2)` and applies the linear transform twice,
/// first with `D = r_1` against `dB`, then with `D = r_2` against the
/// intermediate measure. Each stage's `C` is found by quadrature.
pub fn compose_linear_factors(
    rc: &RecurrenceCoefficients,
    measure: &MeasureSpec,
    divisor: &DivisorSpec,
    n: usize,
    opts: &AdaptiveOptions,
) -> Result<Composition> {
    assert!(n >= 2, "composition needs at least two indices");
    divisor.quadratic_coefficients()?;
    let roots = divisor
        .real_roots(opts.precision)?
        .expect("quadratic roots are closed form");
    let (x1, x2) = match roots.as_slice() {
        [] => {
            return Err(Error::FactorizationUnavailable(
                "discriminant D² - 4E is negative".into(),
            ))
        }
        [r] => (r.clone(), r.clone()),
        [r1, r2] => (r1.clone(), r2.clone()),
        _ => unreachable!("a quadratic has at most two roots"),
    };
    let support = measure.support();
    for x in [&x1, &x2] {
        let inside = match (&support.lo, &support.hi) {
            (Some(lo), Some(hi)) => x > lo && x < hi,
            (Some(lo), None) => x > lo,
            _ => false,
        };
        if inside {
            return Err(Error::FactorizationUnavailable(format!(
                "root {} lies inside the support",
                x.display_rounded(12)
            )));
        }
    }

    let b = Backend::float(opts.precision);
    let first = DivisorSpec::linear(Normalization::Auto, -x1.to_backend(b.join(x1.backend()))?);
    let first = resolve_normalization(measure, &first, opts)?;
    let base = rc.materialize(n + 1, b.join(rc.backend()))?;
    let k1 = kappa_sequence(&base, &first, n)?;
    let mid_rc = transformed_recurrence(&base, &k1)?;
    let mid = measure.modified(&first)?.with_recurrence(mid_rc.clone());

    let second = DivisorSpec::linear(Normalization::Auto, -x2.to_backend(b.join(x2.backend()))?);
    let second = resolve_normalization(&mid, &second, opts)?;
    let k2 = kappa_sequence(&mid_rc, &second, n)?;
    let target = transformed_recurrence(&mid_rc, &k2)?;

    let mut kappa = Vec::with_capacity(n);
    let mut lambda = Vec::with_capacity(n);
    for m in 1..=n {
        let (a, c) = (k1.kappa(m)?, k2.kappa(m)?);
        kappa.push(a + c);
        lambda.push(if m == 1 { a.int_like(0) } else { c * k1.kappa(m - 1)? });
    }
    let c1 = first.c()?.clone();
    let c2 = second.c()?.clone();
    let product = &c1 * &c2;
    if let Normalization::Given(c) = &divisor.normalization {
        let rel = relative_difference(c, &product, &c.int_like(0)).to_f64();
        if rel > 1e-8 {
            log::warn!("C = {} differs from C_1 C_2 = {} (relative {rel:.2e})", c.display_rounded(12), product.display_rounded(12));
        }
    }
    Ok(Composition {
        connection: ConnectionCoefficients::quadratic(kappa, lambda),
        recurrence: target,
        stages: [(c1, first.linear_shift()?.clone()), (c2, second.linear_shift()?.clone())],
        normalization: product,
    })
}

/// Relative residuals of the four relations linking `(κ, λ)` and `(α, α̂)`.
#[derive(Clone, Debug, Default)]
pub struct QuadraticResiduals {
    pub s1: Vec<Scalar>,
    pub s2: Vec<Scalar>,
    pub s3: Vec<Scalar>,
    pub s4: Vec<Scalar>,
}

impl QuadraticResiduals {
    pub fn max(&self) -> f64 {
        [&self.s1, &self.s2, &self.s3, &self.s4]
            .iter()
            .flat_map(|v| v.iter().map(Scalar::to_f64))
            .fold(0.0, f64::max)
    }
}

/// `|Σ terms| / max(|terms|, floor)`; `floor` carries the units of the terms
/// so that relations whose terms all vanish are not scaled by rounding noise.
fn scaled(terms: &[Scalar], floor: Scalar) -> Scalar {
    let zero = terms[0].int_like(0);
    let sum = terms.iter().fold(zero.clone(), |acc, t| acc + t);
    let scale = terms.iter().map(Scalar::abs).fold(floor.abs(), Scalar::max);
    if scale.is_zero() {
        sum.abs()
    } else {
        sum.abs() / scale
    }
}

/// Evaluates the relations for every index where all terms are available
/// (`κ_0 = 0`, `λ_1 = 0`). Residuals are relative to the largest term, or to
/// the matching power of `√β̂` when every term is small.
pub fn quadratic_residuals(
    rc: &RecurrenceCoefficients,
    cc: &ConnectionCoefficients,
    target: &RecurrenceCoefficients,
) -> Result<QuadraticResiduals> {
    let n = cc.len();
    let k = |m: usize| -> Result<Scalar> {
        if m == 0 {
            Ok(rc.beta(0)?.int_like(0))
        } else {
            cc.kappa(m).cloned()
        }
    };
    let l = |m: usize| cc.lambda(m);
    let alpha = |m: usize| target.beta(m);
    let alpha_hat = |m: usize| target.beta_hat(m);
    let mut out = QuadraticResiduals::default();
    for m in 0..n {
        if let Ok(a) = alpha(m) {
            let floor = length(rc.beta_hat(m)?)?;
            out.s1.push(scaled(&[k(m + 1)?, -rc.beta(m)?, -k(m)?, a], floor));
        }
    }
    for m in 1..n {
        if let (Ok(a), Ok(ah)) = (alpha(m), alpha_hat(m - 1)) {
            let lm = if m == 1 { rc.beta(0)?.int_like(0) } else { l(m)? };
            out.s2.push(scaled(
                &[
                    l(m + 1)?,
                    -rc.beta_hat(m - 1)?,
                    -(k(m)? * rc.beta(m - 1)?),
                    -lm,
                    a * k(m)?,
                    ah,
                ],
                rc.beta_hat(m - 1)?,
            ));
        }
    }
    for m in 2..n {
        if let (Ok(a), Ok(ah)) = (alpha(m), alpha_hat(m - 1)) {
            let floor = l(m)? * length(rc.beta_hat(m - 2)?)?;
            out.s3.push(scaled(
                &[
                    k(m)? * rc.beta_hat(m - 2)?,
                    l(m)? * rc.beta(m - 2)?,
                    -(a * l(m)?),
                    -(ah * k(m - 1)?),
                ],
                floor,
            ));
        }
    }
    for m in 3..=n {
        if let Ok(ah) = alpha_hat(m - 1) {
            let floor = l(m)? * rc.beta_hat(m - 3)?;
            out.s4.push(scaled(&[l(m)? * rc.beta_hat(m - 3)?, -(ah * l(m - 1)?)], floor));
        }
    }
    Ok(out)
}

fn length(beta_hat: Scalar) -> Result<Scalar> {
    beta_hat
        .to_backend(beta_hat.backend().float_or(DEFAULT_PRECISION))?
        .abs()
        .sqrt()
}
