//! Integration against a `MeasureSpec` to a relative tolerance.
//!
//! Continuous measures with a known recurrence use Gauss rules with doubling
//! node counts. When the successive differences shrink only algebraically
//! (an integrand singular at a support endpoint, typically `1/(x+D)` with
//! `-D` an endpoint) the integral is redone by tanh-sinh on the density.
//! Discrete measures are summed atom by atom with a ratio-test tail bound.

use crate::error::{Error, Result};
use crate::measure::{AtomSet, Density, MeasureKind, MeasureSpec};
use crate::scalar::{Backend, Scalar, DEFAULT_PRECISION};

use super::cached_gauss_rule;

/// Knobs for [`integrate_adaptive_many`].
#[derive(Clone, Debug)]
pub struct AdaptiveOptions {
    pub tol: f64,
    pub precision: u32,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub max_atoms: usize,
    /// Finest tanh-sinh step is `2^-max_level`.
    pub max_level: u32,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            precision: DEFAULT_PRECISION,
            min_nodes: 16,
            max_nodes: 4096,
            max_atoms: 1_000_000,
            max_level: 12,
        }
    }
}

impl AdaptiveOptions {
    pub fn new(tol: f64, precision: u32) -> Self {
        Self {
            tol,
            precision,
            ..Self::default()
        }
    }

    fn effective_tol(&self) -> f64 {
        self.tol.max(2f64.powi(8 - self.precision as i32))
    }
}

type Integrand<'a> = dyn Fn(&Scalar) -> Result<Vec<Scalar>> + 'a;

/// Distances from a tanh-sinh node to the ends of the support.
struct Gaps<'a> {
    lo: &'a Scalar,
    hi: &'a Scalar,
    from_lo: Scalar,
    to_hi: Scalar,
}

type Inner<'a> = dyn Fn(&Scalar, Option<&Gaps<'_>>) -> Result<Vec<Scalar>> + 'a;

/// `∫ f dμ` to relative tolerance `tol`.
///
/// Works at the precision of the measure's recurrence when it is a float,
/// otherwise at the default precision.
pub fn integrate_adaptive(measure: &MeasureSpec, f: impl Fn(&Scalar) -> Result<Scalar>, tol: f64) -> Result<Scalar> {
    let precision = measure_precision(measure);
    let opts = AdaptiveOptions::new(tol, precision);
    let g = |x: &Scalar| Ok(vec![f(x)?]);
    let mut out = integrate_adaptive_many(measure, &g, &[], &opts)?;
    Ok(out.remove(0))
}

fn measure_precision(measure: &MeasureSpec) -> u32 {
    match measure.kind() {
        MeasureKind::Modified { base, .. } => measure_precision(base),
        _ => measure
            .recurrence()
            .and_then(|rc| rc.backend().precision())
            .unwrap_or(DEFAULT_PRECISION),
    }
}

/// Integrates every component of a vector integrand at once.
///
/// Convergence of component `i` is judged relative to
/// `max(|I_i|, scales[i])`, so components that are zero in exact arithmetic
/// (orthogonality integrals) can be given a natural magnitude.
pub fn integrate_adaptive_many(
    measure: &MeasureSpec,
    f: &Integrand<'_>,
    scales: &[Scalar],
    opts: &AdaptiveOptions,
) -> Result<Vec<Scalar>> {
    integrate_inner(measure, &|x, _| f(x), scales, opts)
}

fn integrate_inner(measure: &MeasureSpec, f: &Inner<'_>, scales: &[Scalar], opts: &AdaptiveOptions) -> Result<Vec<Scalar>> {
    match measure.kind() {
        MeasureKind::Modified { base, divisor } => {
            let g = |x: &Scalar, gaps: Option<&Gaps<'_>>| {
                let w = match gaps {
                    Some(g) => divisor.ratio_near(x, g.lo, g.hi, &g.from_lo, &g.to_hi, opts.precision)?,
                    None => divisor.ratio(x)?,
                };
                Ok(f(x, gaps)?.into_iter().map(|v| v * &w).collect())
            };
            integrate_inner(base, &g, scales, opts)
        }
        MeasureKind::Discrete(AtomSet::Poisson { lambda }) => poisson_sum(lambda, f, scales, opts),
        MeasureKind::Discrete(AtomSet::Finite { nodes, weights }) => {
            let b = Backend::float(opts.precision);
            let mut acc: Option<Vec<Scalar>> = None;
            for (x, w) in nodes.iter().zip(weights) {
                let vals = checked(x, f(&x.to_backend(b)?, None)?)?;
                accumulate(&mut acc, vals.into_iter().map(|v| v * w));
            }
            acc.ok_or_else(|| Error::QuadratureDivergent("empty atom set".into()))
        }
        MeasureKind::RecurrenceOnly => match gauss_doubling(measure, f, scales, opts, false)? {
            Some(v) => Ok(v),
            None => unreachable!("gauss_doubling without fallback either converges or errors"),
        },
        MeasureKind::Continuous { density, support } => {
            if measure.recurrence().is_some() {
                if let Some(v) = gauss_doubling(measure, f, scales, opts, true)? {
                    return Ok(v);
                }
                log::debug!("{}: Gauss doubling stalled, switching to tanh-sinh", measure.label());
            }
            let (lo, hi) = match (&support.lo, &support.hi) {
                (Some(lo), Some(hi)) => (lo, hi),
                _ => {
                    return Err(Error::QuadratureDivergent(
                        "tanh-sinh needs a bounded support".into(),
                    ))
                }
            };
            tanh_sinh(density.as_ref(), lo, hi, f, scales, opts)
        }
    }
}

fn checked(x: &Scalar, vals: Vec<Scalar>) -> Result<Vec<Scalar>> {
    if vals.iter().all(Scalar::is_finite) {
        Ok(vals)
    } else {
        Err(Error::IntegrandSingular(x.to_string()))
    }
}

fn accumulate(acc: &mut Option<Vec<Scalar>>, terms: impl Iterator<Item = Scalar>) {
    match acc {
        Some(sums) => {
            for (s, t) in sums.iter_mut().zip(terms) {
                *s = &*s + t;
            }
        }
        None => *acc = Some(terms.collect()),
    }
}

fn add_magnitudes(mags: &mut Vec<f64>, terms: &[Scalar]) {
    if mags.len() < terms.len() {
        mags.resize(terms.len(), 0.0);
    }
    for (m, t) in mags.iter_mut().zip(terms) {
        *m += t.abs().to_f64();
    }
}

/// Larger of `|value|`, the caller's scale and `∫|f| dμ`.
fn scale_of(value: &Scalar, scales: &[Scalar], mags: &[f64], i: usize) -> f64 {
    let v = value.abs().to_f64().max(mags.get(i).copied().unwrap_or(0.0));
    scales.get(i).map_or(v, |s| v.max(s.abs().to_f64()))
}

fn max_relative_change(new: &[Scalar], old: &[Scalar], scales: &[Scalar], mags: &[f64]) -> f64 {
    new.iter()
        .zip(old)
        .enumerate()
        .map(|(i, (a, b))| {
            let d = (a - b).abs().to_f64();
            let s = scale_of(a, scales, mags, i);
            if d == 0.0 {
                0.0
            } else if s == 0.0 {
                f64::INFINITY
            } else {
                d / s
            }
        })
        .fold(0.0, f64::max)
}

/// Largest Gauss rule tried when tanh-sinh is available as a fallback,
/// raised to `p/2` nodes at high precision.
const GAUSS_BUDGET_WITH_FALLBACK: usize = 128;

/// `Ok(None)` means "stalled, try another method" (only when `fallback`).
fn gauss_doubling(
    measure: &MeasureSpec,
    f: &Inner<'_>,
    scales: &[Scalar],
    opts: &AdaptiveOptions,
    fallback: bool,
) -> Result<Option<Vec<Scalar>>> {
    let tol = opts.effective_tol();
    let mut previous: Option<Vec<Scalar>> = None;
    let mut previous_change: Option<f64> = None;
    let mut m = opts.min_nodes.max(1);
    let cap = if fallback {
        opts.max_nodes.min(GAUSS_BUDGET_WITH_FALLBACK.max(opts.precision as usize / 2))
    } else {
        opts.max_nodes
    };
    while m <= cap {
        let rule = cached_gauss_rule(measure, m, opts.precision)?;
        let mut acc = None;
        let mut mags = Vec::new();
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let vals = checked(x, f(x, None)?)?;
            let terms: Vec<Scalar> = vals.into_iter().map(|v| v * w).collect();
            add_magnitudes(&mut mags, &terms);
            accumulate(&mut acc, terms.into_iter());
        }
        let estimate = acc.expect("rules are never empty");
        if let Some(prev) = &previous {
            let change = max_relative_change(&estimate, prev, scales, &mags);
            log::trace!("gauss m = {m}: change {change:.3e}");
            if change <= tol {
                return Ok(Some(estimate));
            }
            // geometric convergence: the error of this estimate is about change²/previous change
            if let Some(pc) = previous_change {
                if change < pc / 8.0 && change * change / pc <= tol / 8.0 {
                    return Ok(Some(estimate));
                }
            }
            if fallback && m >= 64 {
                if let Some(pc) = previous_change {
                    if change > pc / 8.0 {
                        return Ok(None);
                    }
                }
            }
            previous_change = Some(change);
        }
        previous = Some(estimate);
        m *= 2;
    }
    if fallback {
        Ok(None)
    } else {
        Err(Error::QuadratureDivergent(format!(
            "Gauss rules did not converge by {} nodes",
            opts.max_nodes
        )))
    }
}

/// Outermost tanh-sinh terms may exceed the tolerance by this factor.
const EDGE_SLACK: f64 = 16.0;

/// Tanh-sinh on `[lo, hi]` against `density`, halving the step until two
/// levels agree, then checking that the outermost terms are negligible
/// (otherwise the integral diverges or is unresolvable at this precision).
fn tanh_sinh(
    density: &dyn Density,
    lo: &Scalar,
    hi: &Scalar,
    f: &Inner<'_>,
    scales: &[Scalar],
    opts: &AdaptiveOptions,
) -> Result<Vec<Scalar>> {
    let p = opts.precision;
    let b = Backend::float(p);
    let tol = opts.effective_tol();
    let lo = lo.to_backend(b)?;
    let hi = hi.to_backend(b)?;
    let width = &hi - &lo;
    let hw = &width / b.int(2);
    let mid = (&lo + &hi) / b.int(2);
    let half_pi = b.pi()? / b.int(2);
    let one = b.one();

    // Smallest endpoint gap is about 2^-3p of the width.
    let u_max = 1.5 * p as f64 * std::f64::consts::LN_2;
    let t_max = (2.0 * u_max / std::f64::consts::PI).asinh();

    let node = |t: f64| -> Result<Option<Vec<Scalar>>> {
        let ts = b.from_f64(t.abs())?;
        let ts_f = ts.as_float().expect("float backend");
        let sinh = Scalar::Float(rug::Float::with_val(p, ts_f.sinh_ref()));
        let cosh = Scalar::Float(rug::Float::with_val(p, ts_f.cosh_ref()));
        let u = &half_pi * sinh;
        let q = (-(&u * b.int(2))).exp()?;
        let one_q = &one + &q;
        let gap = &width * &q / &one_q;
        let weight = &hw * &half_pi * cosh * b.int(4) * &q / one_q.square();
        let (x, from_lo, to_hi) = if t > 0.0 {
            (&hi - &gap, &width - &gap, gap)
        } else if t < 0.0 {
            (&lo + &gap, gap.clone(), &width - &gap)
        } else {
            (mid.clone(), hw.clone(), hw.clone())
        };
        let dens = density.value(&x, &from_lo, &to_hi)?;
        if dens.is_zero() {
            return Ok(None);
        }
        let scale = dens * weight;
        let gaps = Gaps {
            lo: &lo,
            hi: &hi,
            from_lo,
            to_hi,
        };
        let vals = checked(&x, f(&x, Some(&gaps))?)?;
        Ok(Some(vals.into_iter().map(|v| v * &scale).collect()))
    };

    let mut raw: Option<Vec<Scalar>> = None;
    let mut raw_mags: Vec<f64> = Vec::new();
    let mut edge: Vec<f64> = Vec::new();
    let mut edge_t = 0.0f64;
    let mut previous: Option<Vec<Scalar>> = None;
    for level in 0..=opts.max_level {
        let h = 0.5f64.powi(level as i32);
        let steps = (t_max / h).floor() as i64;
        for j in -steps..=steps {
            if level == 0 || j % 2 != 0 {
                let t = j as f64 * h;
                if let Some(terms) = node(t)? {
                    if t.abs() >= edge_t {
                        let mags: Vec<f64> = terms.iter().map(|v| v.abs().to_f64()).collect();
                        if t.abs() > edge_t || edge.is_empty() {
                            edge = mags;
                        } else {
                            for (e, m) in edge.iter_mut().zip(mags) {
                                *e = e.max(m);
                            }
                        }
                        edge_t = t.abs();
                    }
                    add_magnitudes(&mut raw_mags, &terms);
                    accumulate(&mut raw, terms.into_iter());
                }
            }
        }
        let Some(sums) = &raw else {
            return Ok(Vec::new());
        };
        let hs = b.from_f64(h)?;
        let estimate: Vec<Scalar> = sums.iter().map(|s| s * &hs).collect();
        let mags: Vec<f64> = raw_mags.iter().map(|m| m * h).collect();
        if level >= 2 {
            let prev = previous.as_ref().expect("previous level present");
            let change = max_relative_change(&estimate, prev, scales, &mags);
            if change <= tol {
                for (i, e) in edge.iter().enumerate() {
                    let s = scale_of(&estimate[i], scales, &mags, i);
                    if !(*e <= EDGE_SLACK * tol * s) {
                        return Err(Error::QuadratureDivergent(format!(
                            "endpoint contributions do not decay (component {i}: {e:.3e} against {s:.3e})"
                        )));
                    }
                }
                return Ok(estimate);
            }
        }
        previous = Some(estimate);
    }
    Err(Error::QuadratureDivergent(format!(
        "tanh-sinh did not converge by step 2^-{}",
        opts.max_level
    )))
}

/// `Σ_k f(k) e^{-λ} λ^k / k!`, stopped once the ratio-test bound on the tail
/// is below `tol` times the partial sum for three consecutive atoms.
fn poisson_sum(lambda: &Scalar, f: &Inner<'_>, scales: &[Scalar], opts: &AdaptiveOptions) -> Result<Vec<Scalar>> {
    let b = Backend::float(opts.precision);
    let tol = opts.effective_tol();
    let lam = lambda.to_backend(b)?;
    let lam_f = lam.to_f64();
    let mut weight = (-&lam).exp()?;
    let mut sums: Option<Vec<Scalar>> = None;
    let mut mags: Vec<f64> = Vec::new();
    let mut previous: Option<Vec<Scalar>> = None;
    let mut passes = 0;
    for k in 0..opts.max_atoms {
        let x = b.int(k as i64);
        let vals = checked(&x, f(&x, None)?)?;
        let terms: Vec<Scalar> = vals.iter().map(|v| v * &weight).collect();
        add_magnitudes(&mut mags, &terms);
        accumulate(&mut sums, terms.iter().cloned());
        let totals = sums.as_ref().expect("just accumulated");

        let mut ok = (k as f64) > lam_f + 1.0;
        if let (true, Some(prev)) = (ok, &previous) {
            let base = lam_f / (k as f64 + 1.0);
            for i in 0..vals.len() {
                let (now, before) = (vals[i].abs().to_f64(), prev[i].abs().to_f64());
                if now == 0.0 && before == 0.0 {
                    continue;
                }
                let rho = if before == 0.0 { f64::INFINITY } else { base * now / before };
                let tail = terms[i].abs().to_f64() * rho / (1.0 - rho);
                if !(rho < 1.0 && tail <= tol * scale_of(&totals[i], scales, &mags, i)) {
                    ok = false;
                    break;
                }
            }
        } else {
            ok = false;
        }
        passes = if ok { passes + 1 } else { 0 };
        if passes >= 3 {
            return Ok(sums.expect("nonempty"));
        }
        previous = Some(vals);
        weight = weight * &lam / b.int(k as i64 + 1);
    }
    Err(Error::QuadratureDivergent(format!(
        "atom sum not converged after {} atoms",
        opts.max_atoms
    )))
}
