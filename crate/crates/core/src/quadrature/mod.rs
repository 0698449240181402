//! Gauss rules, tanh-sinh fallback and atom summation.

mod adaptive;
mod eigen;

use std::sync::Arc;

use rug::Float;

use crate::error::{Error, Result};
use crate::measure::MeasureSpec;
use crate::recurrence::RecurrenceCoefficients;
use crate::scalar::Scalar;

pub use adaptive::{integrate_adaptive, integrate_adaptive_many, AdaptiveOptions};
pub use eigen::tridiagonal_eigen;

/// Nodes and weights approximating integration against one measure.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<Scalar>,
    pub weights: Vec<Scalar>,
    pub label: String,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Golub–Welsch: nodes are the eigenvalues of the `m × m` Jacobi matrix and
/// weights the squared first eigenvector components.
pub fn gauss_rule(rc: &RecurrenceCoefficients, m: usize) -> Result<QuadratureRule> {
    let precision = rc
        .backend()
        .precision()
        .ok_or(Error::BackendUnsupported("gauss_rule"))?;
    let jm = rc.jacobi_matrix(m)?;
    let diag: Vec<Float> = jm.diag.iter().map(|s| s.to_float(precision)).collect();
    let off: Vec<Float> = jm.offdiag.iter().map(|s| s.to_float(precision)).collect();
    let (values, firsts) = tridiagonal_eigen(&diag, &off, precision)?;
    Ok(QuadratureRule {
        nodes: values.into_iter().map(Scalar::Float).collect(),
        weights: firsts
            .into_iter()
            .map(|z| Scalar::Float(Float::with_val(precision, z.square_ref())))
            .collect(),
        label: format!("gauss-{m}"),
    })
}

/// Gauss rule for `measure` at `precision` bits, memoized on the measure.
pub(crate) fn cached_gauss_rule(measure: &MeasureSpec, m: usize, precision: u32) -> Result<Arc<QuadratureRule>> {
    let key = (m, precision);
    if let Some(rule) = measure.rules.lock().expect("rule cache poisoned").get(&key) {
        return Ok(Arc::clone(rule));
    }
    let rc = measure
        .recurrence()
        .ok_or(Error::BackendUnsupported("gauss rule without a recurrence"))?
        .with_backend(crate::scalar::Backend::float(precision))?;
    let rule = Arc::new(gauss_rule(&rc, m)?);
    measure
        .rules
        .lock()
        .expect("rule cache poisoned")
        .insert(key, Arc::clone(&rule));
    Ok(rule)
}

/// `Σ w_j f(x_j)`.
pub fn integrate(rule: &QuadratureRule, f: impl Fn(&Scalar) -> Result<Scalar>) -> Result<Scalar> {
    let mut acc: Option<Scalar> = None;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let v = f(x)?;
        if !v.is_finite() {
            return Err(Error::IntegrandSingular(x.to_string()));
        }
        let term = w * v;
        acc = Some(match acc {
            Some(a) => a + term,
            None => term,
        });
    }
    acc.ok_or_else(|| Error::QuadratureDivergent("empty rule".into()))
}
