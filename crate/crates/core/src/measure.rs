//! Descriptions of the measures the quadrature module integrates against.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::divisor::DivisorSpec;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::recurrence::RecurrenceCoefficients;
use crate::scalar::{Backend, Scalar};

/// A probability density on a compact interval.
///
/// Besides `x`, implementations receive the distances `x - lo` and `hi - x`
/// computed without cancellation, so endpoint singularities can be evaluated
/// accurately close to the boundary.
pub trait Density: Send + Sync + fmt::Debug {
    fn value(&self, x: &Scalar, from_lo: &Scalar, to_hi: &Scalar) -> Result<Scalar>;
}

/// `K (hi - x)^α (x - lo)^γ` normalized to unit mass.
#[derive(Debug)]
pub struct JacobiDensity {
    alpha: Scalar,
    gamma: Scalar,
    length: Scalar,
    constants: Mutex<HashMap<u32, Scalar>>,
}

impl JacobiDensity {
    pub fn new(alpha: Scalar, gamma: Scalar, lo: &Scalar, hi: &Scalar) -> Self {
        Self {
            alpha,
            gamma,
            length: hi - lo,
            constants: Mutex::new(HashMap::new()),
        }
    }

    fn constant(&self, precision: u32) -> Result<Scalar> {
        let mut cache = self.constants.lock().expect("density cache poisoned");
        if let Some(k) = cache.get(&precision) {
            return Ok(k.clone());
        }
        let b = Backend::float(precision);
        let a = self.alpha.to_backend(b)?;
        let g = self.gamma.to_backend(b)?;
        let one = b.one();
        let s = &a + &g;
        let k = (&s + b.int(2)).gamma()?
            / ((&a + &one).gamma()? * (&g + &one).gamma()?)
            / self.length.to_backend(b)?.powf(&(&s + &one))?;
        cache.insert(precision, k.clone());
        Ok(k)
    }
}

impl Density for JacobiDensity {
    fn value(&self, x: &Scalar, from_lo: &Scalar, to_hi: &Scalar) -> Result<Scalar> {
        let precision = x.backend().precision().unwrap_or(crate::scalar::DEFAULT_PRECISION);
        let b = Backend::float(precision);
        let k = self.constant(precision)?;
        let left = from_lo.to_backend(b)?;
        let right = to_hi.to_backend(b)?;
        if left.signum() < 0 || right.signum() < 0 {
            return Ok(b.zero());
        }
        Ok(k * right.powf(&self.alpha)? * left.powf(&self.gamma)?)
    }
}

/// Closed support interval `[lo, hi]`; `None` marks an infinite end.
#[derive(Clone, Debug)]
pub struct Interval {
    pub lo: Option<Scalar>,
    pub hi: Option<Scalar>,
}

impl Interval {
    pub fn contains(&self, x: &Scalar) -> bool {
        self.lo.as_ref().is_none_or(|lo| x >= lo) && self.hi.as_ref().is_none_or(|hi| x <= hi)
    }
}

#[derive(Clone, Debug)]
pub enum AtomSet {
    /// Mass `e^{-λ} λ^n / n!` at every `n ≥ 0`.
    Poisson { lambda: Scalar },
    Finite { nodes: Vec<Scalar>, weights: Vec<Scalar> },
}

#[derive(Clone, Debug)]
pub enum MeasureKind {
    Continuous { density: Arc<dyn Density>, support: Interval },
    Discrete(AtomSet),
    /// Known only through its recurrence; integrated by Gauss rules.
    RecurrenceOnly,
    /// `dA = C/P(x) dB` for a resolved divisor.
    Modified { base: Box<MeasureSpec>, divisor: DivisorSpec },
}

pub(crate) type RuleCache = Mutex<HashMap<(usize, u32), Arc<QuadratureRule>>>;

#[derive(Clone, Debug)]
pub struct MeasureSpec {
    kind: MeasureKind,
    recurrence: Option<RecurrenceCoefficients>,
    label: String,
    pub(crate) rules: Arc<RuleCache>,
}

impl MeasureSpec {
    fn build(kind: MeasureKind, recurrence: Option<RecurrenceCoefficients>, label: impl Into<String>) -> Self {
        Self {
            kind,
            recurrence,
            label: label.into(),
            rules: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    pub fn continuous(density: Arc<dyn Density>, lo: Scalar, hi: Scalar, label: impl Into<String>) -> Self {
        Self::build(
            MeasureKind::Continuous {
                density,
                support: Interval {
                    lo: Some(lo),
                    hi: Some(hi),
                },
            },
            None,
            label,
        )
    }

    pub fn discrete(atoms: AtomSet, label: impl Into<String>) -> Self {
        Self::build(MeasureKind::Discrete(atoms), None, label)
    }

    pub fn from_recurrence(rc: RecurrenceCoefficients, label: impl Into<String>) -> Self {
        Self::build(MeasureKind::RecurrenceOnly, Some(rc), label)
    }

    /// Attaches the recurrence orthogonalized by this measure, enabling Gauss rules.
    pub fn with_recurrence(mut self, rc: RecurrenceCoefficients) -> Self {
        self.recurrence = Some(rc);
        self.rules = Arc::new(Mutex::new(HashMap::new()));
        self
    }

    /// `C/P(x)` times this measure. The divisor's `C` must be resolved.
    pub fn modified(&self, divisor: &DivisorSpec) -> Result<MeasureSpec> {
        divisor.c()?;
        let label = format!("{} / P", self.label);
        Ok(Self::build(
            MeasureKind::Modified {
                base: Box::new(self.clone()),
                divisor: divisor.clone(),
            },
            None,
            label,
        ))
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn recurrence(&self) -> Option<&RecurrenceCoefficients> {
        self.recurrence.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_discrete(&self) -> bool {
        match &self.kind {
            MeasureKind::Discrete(_) => true,
            MeasureKind::Modified { base, .. } => base.is_discrete(),
            _ => false,
        }
    }

    /// Support interval; unbounded when only the recurrence is known.
    pub fn support(&self) -> Interval {
        match &self.kind {
            MeasureKind::Continuous { support, .. } => support.clone(),
            MeasureKind::Discrete(AtomSet::Poisson { lambda }) => Interval {
                lo: Some(lambda.int_like(0)),
                hi: None,
            },
            MeasureKind::Discrete(AtomSet::Finite { nodes, .. }) => Interval {
                lo: nodes.iter().cloned().reduce(Scalar::min),
                hi: nodes.iter().cloned().reduce(Scalar::max),
            },
            MeasureKind::RecurrenceOnly => Interval { lo: None, hi: None },
            MeasureKind::Modified { base, .. } => base.support(),
        }
    }

    /// Checks that `P` has constant sign on the support and that `C/P ≥ 0` there.
    ///
    /// Closed-form roots are compared with the support interval; the sign of
    /// `C/P` is then sampled at interior points (or the first atoms).
    pub fn check_divisor(&self, divisor: &DivisorSpec, precision: u32) -> Result<()> {
        let support = self.support();
        if let Some(roots) = divisor.real_roots(precision)? {
            for x in roots {
                let inside = match (&support.lo, &support.hi) {
                    (Some(lo), Some(hi)) => {
                        if self.is_discrete() {
                            self.has_atom_at(&x)
                        } else {
                            &x > lo && &x < hi
                        }
                    }
                    (Some(lo), None) => {
                        if self.is_discrete() {
                            self.has_atom_at(&x)
                        } else {
                            &x > lo
                        }
                    }
                    _ => false,
                };
                if inside {
                    return Err(Error::InvalidDivisor(format!(
                        "P vanishes at x = {} inside the support",
                        x.display_rounded(12)
                    )));
                }
            }
        }
        if divisor.is_resolved() {
            let c = divisor.c()?;
            let samples: Vec<Scalar> = match (&self.kind, &support.lo, &support.hi) {
                (MeasureKind::Discrete(AtomSet::Finite { nodes, .. }), _, _) => nodes.clone(),
                (_, Some(lo), _) if self.is_discrete() => (0..8).map(|k| lo + lo.int_like(k)).collect(),
                (_, Some(lo), Some(hi)) => {
                    let three = lo.int_like(3);
                    let four = lo.int_like(4);
                    vec![(lo * &three + hi) / &four, (lo + hi) / lo.int_like(2), (lo + hi * &three) / &four]
                }
                _ => Vec::new(),
            };
            for x in samples {
                let p = divisor.polynomial(&x);
                if p.is_zero() || (c * &p).signum() < 0 {
                    return Err(Error::InvalidDivisor(format!(
                        "C/P(x) is negative or undefined at x = {}",
                        x.display_rounded(12)
                    )));
                }
            }
        }
        Ok(())
    }

    fn has_atom_at(&self, x: &Scalar) -> bool {
        match &self.kind {
            MeasureKind::Discrete(AtomSet::Poisson { .. }) => {
                let lo = x.int_like(0);
                if x < &lo {
                    return false;
                }
                let f = x.to_f64();
                f.fract() == 0.0 && *x == x.int_like(f as i64)
            }
            MeasureKind::Discrete(AtomSet::Finite { nodes, .. }) => nodes.iter().any(|n| n == x),
            MeasureKind::Modified { base, .. } => base.has_atom_at(x),
            _ => false,
        }
    }
}
