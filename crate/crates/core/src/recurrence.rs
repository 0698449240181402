//! Monic three-term recurrences
//!
//! `b_{n+1}(x) = (x - beta[n]) b_n(x) - beta_hat[n-1] b_{n-1}(x)`, with
//! `b_{-1} = 0` and `b_0 = 1`. The index convention keeps `beta_hat[k]` equal to
//! the subscript of the coefficient it multiplies, so the step producing
//! `b_{n+1}` reads `beta_hat[n-1]`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{Backend, Scalar};

/// Closed-form coefficient source, evaluated on demand.
pub trait CoefficientGenerator: Send + Sync + fmt::Debug {
    fn beta(&self, n: usize, backend: Backend) -> Result<Scalar>;
    fn beta_hat(&self, k: usize, backend: Backend) -> Result<Scalar>;
}

#[derive(Clone, Debug)]
enum Source {
    Table {
        beta: Arc<Vec<Scalar>>,
        beta_hat: Arc<Vec<Scalar>>,
    },
    Lazy(Arc<dyn CoefficientGenerator>),
}

/// The `beta`, `beta_hat` sequences of a monic recurrence, stored or generated.
#[derive(Clone, Debug)]
pub struct RecurrenceCoefficients {
    source: Source,
    backend: Backend,
}

/// Symmetric tridiagonal matrix with `diag[i] = beta[i]` and
/// `offdiag[i] = sqrt(beta_hat[i])`.
#[derive(Clone, Debug)]
pub struct JacobiMatrix {
    pub diag: Vec<Scalar>,
    pub offdiag: Vec<Scalar>,
}

impl JacobiMatrix {
    pub fn dimension(&self) -> usize {
        self.diag.len()
    }
}

impl RecurrenceCoefficients {
    /// Builds a finite table. All values are promoted to a common backend and
    /// `beta_hat` must be strictly positive.
    pub fn from_tables(beta: Vec<Scalar>, beta_hat: Vec<Scalar>) -> Result<Self> {
        let backend = beta
            .iter()
            .chain(beta_hat.iter())
            .fold(Backend::Rational, |acc, s| acc.join(s.backend()));
        let beta = beta
            .iter()
            .map(|s| s.to_backend(backend))
            .collect::<Result<Vec<_>>>()?;
        let beta_hat = beta_hat
            .iter()
            .map(|s| s.to_backend(backend))
            .collect::<Result<Vec<_>>>()?;
        for (index, b) in beta.iter().enumerate() {
            if !b.is_finite() {
                return Err(Error::InvalidFamily(format!("beta[{index}] is not finite")));
            }
        }
        for (index, b) in beta_hat.iter().enumerate() {
            if !b.is_positive() || !b.is_finite() {
                return Err(Error::PositivityViolation {
                    what: "beta_hat",
                    index,
                    value: b.to_string(),
                });
            }
        }
        Ok(Self {
            source: Source::Table {
                beta: Arc::new(beta),
                beta_hat: Arc::new(beta_hat),
            },
            backend,
        })
    }

    pub fn from_generator(generator: Arc<dyn CoefficientGenerator>, backend: Backend) -> Self {
        Self {
            source: Source::Lazy(generator),
            backend,
        }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// Same coefficients in another backend. Stored floats cannot become rationals.
    pub fn with_backend(&self, backend: Backend) -> Result<Self> {
        match &self.source {
            Source::Lazy(g) => Ok(Self::from_generator(Arc::clone(g), backend)),
            Source::Table { beta, beta_hat } => {
                let convert = |v: &[Scalar]| v.iter().map(|s| s.to_backend(backend)).collect::<Result<Vec<_>>>();
                Ok(Self {
                    source: Source::Table {
                        beta: Arc::new(convert(beta)?),
                        beta_hat: Arc::new(convert(beta_hat)?),
                    },
                    backend,
                })
            }
        }
    }

    /// Stored lengths `(beta, beta_hat)`; `None` for generated sequences.
    pub fn stored_lengths(&self) -> Option<(usize, usize)> {
        match &self.source {
            Source::Table { beta, beta_hat } => Some((beta.len(), beta_hat.len())),
            Source::Lazy(_) => None,
        }
    }

    /// Highest degree `n` for which `b_n` is computable.
    pub fn max_degree(&self) -> Option<usize> {
        self.stored_lengths().map(|(nb, nh)| nb.min(nh + 1))
    }

    pub fn beta(&self, n: usize) -> Result<Scalar> {
        match &self.source {
            Source::Table { beta, .. } => beta.get(n).cloned().ok_or(Error::InsufficientCoefficients {
                what: "beta",
                index: n,
                available: beta.len(),
            }),
            Source::Lazy(g) => g.beta(n, self.backend),
        }
    }

    pub fn beta_hat(&self, k: usize) -> Result<Scalar> {
        match &self.source {
            Source::Table { beta_hat, .. } => {
                beta_hat.get(k).cloned().ok_or(Error::InsufficientCoefficients {
                    what: "beta_hat",
                    index: k,
                    available: beta_hat.len(),
                })
            }
            Source::Lazy(g) => g.beta_hat(k, self.backend),
        }
    }

    pub fn betas(&self, count: usize) -> Result<Vec<Scalar>> {
        (0..count).map(|n| self.beta(n)).collect()
    }

    pub fn beta_hats(&self, count: usize) -> Result<Vec<Scalar>> {
        (0..count).map(|k| self.beta_hat(k)).collect()
    }

    /// Stored copy of the coefficients needed for `b_0..b_degree`, converted to
    /// `backend`. Evaluating a table is much cheaper than a generator.
    pub fn materialize(&self, degree: usize, backend: Backend) -> Result<Self> {
        let beta = (0..degree.max(1))
            .map(|n| self.beta(n)?.to_backend(backend))
            .collect::<Result<Vec<_>>>()?;
        let mut beta_hat = Vec::with_capacity(degree);
        for k in 0..degree.max(1) {
            match self.beta_hat(k) {
                Ok(v) => beta_hat.push(v.to_backend(backend)?),
                Err(Error::InsufficientCoefficients { .. }) if k + 1 >= degree => break,
                Err(e) => return Err(e),
            }
        }
        Self::from_tables(beta, beta_hat)
    }

    /// Values `b_0(x), ..., b_n(x)`.
    pub fn eval_monic_sequence(&self, n: usize, x: &Scalar) -> Result<Vec<Scalar>> {
        let mut values = Vec::with_capacity(n + 1);
        values.push(x.int_like(1).to_backend(x.backend().join(self.backend))?);
        if n == 0 {
            return Ok(values);
        }
        values.push(x - self.beta(0)?);
        for k in 1..n {
            let next = (x - self.beta(k)?) * &values[k] - self.beta_hat(k - 1)? * &values[k - 1];
            values.push(next);
        }
        Ok(values)
    }

    /// `b_n(x)` alone.
    pub fn eval(&self, n: usize, x: &Scalar) -> Result<Scalar> {
        Ok(self.eval_monic_sequence(n, x)?.pop().expect("sequence is never empty"))
    }

    /// `∫ b_n² dB = beta_hat[0] ⋯ beta_hat[n-1]`.
    pub fn squared_norm(&self, n: usize) -> Result<Scalar> {
        let mut acc = self.backend.one();
        for k in 0..n {
            acc = acc * self.beta_hat(k)?;
        }
        Ok(acc)
    }

    /// Norms `‖b_0‖², ..., ‖b_n‖²`.
    pub fn squared_norms(&self, n: usize) -> Result<Vec<Scalar>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(self.backend.one());
        for k in 0..n {
            let next = &out[k] * self.beta_hat(k)?;
            out.push(next);
        }
        Ok(out)
    }

    /// The `m × m` Jacobi matrix. Needs the float backend for the square roots.
    pub fn jacobi_matrix(&self, m: usize) -> Result<JacobiMatrix> {
        if self.backend.is_exact() {
            return Err(Error::BackendUnsupported("jacobi_matrix"));
        }
        assert!(m >= 1, "Jacobi matrix dimension must be at least 1");
        let diag = self.betas(m)?;
        let mut offdiag = Vec::with_capacity(m - 1);
        for k in 0..m - 1 {
            let b = self.beta_hat(k)?;
            if !b.is_positive() {
                return Err(Error::PositivityViolation {
                    what: "beta_hat",
                    index: k,
                    value: b.to_string(),
                });
            }
            offdiag.push(b.sqrt()?);
        }
        Ok(JacobiMatrix { diag, offdiag })
    }

    /// Monomial coefficients (constant term first) of `b_0, ..., b_n`.
    pub fn monomial_coefficients(&self, n: usize) -> Result<Vec<Vec<Scalar>>> {
        let zero = self.backend.zero();
        let mut polys: Vec<Vec<Scalar>> = vec![vec![self.backend.one()]];
        if n == 0 {
            return Ok(polys);
        }
        polys.push(vec![-self.beta(0)?, self.backend.one()]);
        for k in 1..n {
            let beta = self.beta(k)?;
            let beta_hat = self.beta_hat(k - 1)?;
            let mut next = vec![zero.clone(); k + 2];
            for (i, c) in polys[k].iter().enumerate() {
                next[i + 1] = &next[i + 1] + c;
                next[i] = &next[i] - &beta * c;
            }
            for (i, c) in polys[k - 1].iter().enumerate() {
                next[i] = &next[i] - &beta_hat * c;
            }
            polys.push(next);
        }
        Ok(polys)
    }
}

/// Evaluates a polynomial given by monomial coefficients (constant first).
pub fn horner(coefficients: &[Scalar], x: &Scalar) -> Scalar {
    let mut acc = x.int_like(0);
    for c in coefficients.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chebyshev_u(backend: Backend, len: usize) -> RecurrenceCoefficients {
        RecurrenceCoefficients::from_tables(
            vec![backend.zero(); len],
            vec![backend.ratio(1, 4); len],
        )
        .unwrap()
    }

    #[test]
    fn chebyshev_u_values_at_one() {
        let q = Backend::Rational;
        let rc = chebyshev_u(q, 4);
        let v = rc.eval_monic_sequence(2, &q.int(1)).unwrap();
        assert_eq!(v, vec![q.int(1), q.int(1), q.ratio(3, 4)]);
        assert_eq!(rc.eval_monic_sequence(0, &q.ratio(7, 3)).unwrap(), vec![q.int(1)]);
    }

    #[test]
    fn norms_are_products() {
        let q = Backend::Rational;
        let rc = chebyshev_u(q, 4);
        assert_eq!(rc.squared_norm(3).unwrap(), q.ratio(1, 64));
        assert_eq!(rc.squared_norm(0).unwrap(), q.int(1));
    }

    #[test]
    fn insufficient_coefficients_reported() {
        let q = Backend::Rational;
        let rc = chebyshev_u(q, 2);
        let err = rc.eval_monic_sequence(4, &q.int(0)).unwrap_err();
        assert!(matches!(err, Error::InsufficientCoefficients { .. }));
        assert!(rc.squared_norm(3).is_err());
        assert_eq!(rc.max_degree(), Some(2));
    }

    #[test]
    fn jacobi_matrix_shapes() {
        let f = Backend::float(128);
        let rc = chebyshev_u(f, 4);
        let j = rc.jacobi_matrix(2).unwrap();
        assert_eq!(j.diag, vec![f.zero(), f.zero()]);
        assert_eq!(j.offdiag, vec![f.ratio(1, 2)]);
        let j1 = rc.jacobi_matrix(1).unwrap();
        assert_eq!(j1.dimension(), 1);
        assert!(j1.offdiag.is_empty());
        let exact = chebyshev_u(Backend::Rational, 4);
        assert!(matches!(exact.jacobi_matrix(2), Err(Error::BackendUnsupported(_))));
    }

    #[test]
    fn nonpositive_beta_hat_rejected() {
        let q = Backend::Rational;
        let err = RecurrenceCoefficients::from_tables(vec![q.zero(); 3], vec![q.int(1), q.zero()]).unwrap_err();
        assert!(matches!(err, Error::PositivityViolation { index: 1, .. }));
    }

    #[test]
    fn monomial_expansion_matches_evaluation() {
        let q = Backend::Rational;
        let rc = RecurrenceCoefficients::from_tables(
            vec![q.ratio(1, 2), q.int(-1), q.ratio(2, 3), q.int(0)],
            vec![q.int(2), q.ratio(1, 5), q.int(3)],
        )
        .unwrap();
        let polys = rc.monomial_coefficients(4).unwrap();
        for x in [q.ratio(-3, 2), q.int(0), q.ratio(5, 7)] {
            let vals = rc.eval_monic_sequence(4, &x).unwrap();
            for (p, v) in polys.iter().zip(vals.iter()) {
                assert_eq!(horner(p, &x), *v);
                assert_eq!(*p.last().unwrap(), q.int(1));
            }
        }
    }
}
