//! Closed-form families: recurrences, measures and reference connection
//! coefficients for the divisors with known answers.

use std::sync::Arc;

use crate::divisor::{DivisorKind, DivisorSpec, Normalization};
use crate::error::{Error, Result};
use crate::measure::{AtomSet, JacobiDensity, MeasureSpec};
use crate::recurrence::{CoefficientGenerator, RecurrenceCoefficients};
use crate::scalar::{Backend, Scalar};

#[derive(Clone, Debug)]
pub enum FamilySpec {
    /// Weight `(1-x)^α (1+x)^γ` on `[-1, 1]`.
    Jacobi { alpha: Scalar, gamma: Scalar },
    Legendre,
    ChebyshevU,
    /// Poisson weights `e^{-λ} λ^n / n!` on `n = 0, 1, ...`.
    Charlier { lambda: Scalar },
    /// `√(4 - x²) / 2π` on `[-2, 2]`.
    Semicircle,
}

/// Jacobi parameters plus the affine image `[lo, hi]` of `[-1, 1]`.
struct JacobiShape {
    alpha: Scalar,
    gamma: Scalar,
    lo: Scalar,
    hi: Scalar,
}

impl JacobiShape {
    /// Half-length: coordinates scale as `x' = c x + (lo + hi)/2`.
    fn scale(&self) -> Scalar {
        (&self.hi - &self.lo) / self.hi.int_like(2)
    }
}

#[derive(Debug)]
struct JacobiGenerator {
    alpha: Scalar,
    gamma: Scalar,
    lo: Scalar,
    hi: Scalar,
}

impl JacobiGenerator {
    fn work_backend(&self, backend: Backend) -> Backend {
        let params = self
            .alpha
            .backend()
            .join(self.gamma.backend())
            .join(self.lo.backend())
            .join(self.hi.backend());
        if params.is_exact() {
            Backend::Rational
        } else {
            params.join(backend)
        }
    }
}

impl CoefficientGenerator for JacobiGenerator {
    fn beta(&self, n: usize, backend: Backend) -> Result<Scalar> {
        let w = self.work_backend(backend);
        let a = self.alpha.to_backend(w)?;
        let g = self.gamma.to_backend(w)?;
        let s = &a + &g;
        let two = w.int(2);
        let standard = if n == 0 {
            -(&a - &g) / (&s + &two)
        } else {
            let nn = w.int(2 * n as i64);
            -(a.square() - g.square()) / ((&nn + &s + &two) * (&nn + &s))
        };
        let lo = self.lo.to_backend(w)?;
        let hi = self.hi.to_backend(w)?;
        let value = (&hi - &lo) / &two * standard + (&lo + &hi) / &two;
        value.to_backend(backend)
    }

    fn beta_hat(&self, k: usize, backend: Backend) -> Result<Scalar> {
        let w = self.work_backend(backend);
        let a = self.alpha.to_backend(w)?;
        let g = self.gamma.to_backend(w)?;
        let s = &a + &g;
        let one = w.one();
        let standard = if k == 0 {
            w.int(4) * (&a + &one) * (&g + &one) / ((&s + w.int(2)).square() * (&s + w.int(3)))
        } else {
            let n = w.int(k as i64 + 1);
            let two_n = &n + &n;
            w.int(4) * &n * (&s + &n) * (&n + &a) * (&n + &g)
                / ((&s + &two_n - &one) * (&two_n + &s).square() * (&s + &two_n + &one))
        };
        let c = (self.hi.to_backend(w)? - self.lo.to_backend(w)?) / w.int(2);
        (c.square() * standard).to_backend(backend)
    }
}

#[derive(Debug)]
struct CharlierGenerator {
    lambda: Scalar,
}

impl CoefficientGenerator for CharlierGenerator {
    fn beta(&self, n: usize, backend: Backend) -> Result<Scalar> {
        (backend.int(n as i64) + self.lambda.to_backend(backend)?).to_backend(backend)
    }

    fn beta_hat(&self, k: usize, backend: Backend) -> Result<Scalar> {
        (backend.int(k as i64 + 1) * self.lambda.to_backend(backend)?).to_backend(backend)
    }
}

impl FamilySpec {
    pub fn jacobi(alpha: Scalar, gamma: Scalar) -> Self {
        FamilySpec::Jacobi { alpha, gamma }
    }

    pub fn name(&self) -> String {
        match self {
            FamilySpec::Jacobi { alpha, gamma } => format!("jacobi({alpha}, {gamma})"),
            FamilySpec::Legendre => "legendre".into(),
            FamilySpec::ChebyshevU => "chebyshev_u".into(),
            FamilySpec::Charlier { lambda } => format!("charlier({lambda})"),
            FamilySpec::Semicircle => "semicircle".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FamilySpec::Jacobi { alpha, gamma } => {
                let minus_one = alpha.int_like(-1);
                if !(alpha > &minus_one && gamma > &minus_one) {
                    return Err(Error::InvalidFamily(format!(
                        "jacobi needs alpha, gamma > -1, got ({alpha}, {gamma})"
                    )));
                }
            }
            FamilySpec::Charlier { lambda } => {
                if !lambda.is_positive() {
                    return Err(Error::InvalidFamily(format!("charlier needs lambda > 0, got {lambda}")));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn jacobi_shape(&self) -> Option<JacobiShape> {
        let q = Backend::Rational;
        let (alpha, gamma, half) = match self {
            FamilySpec::Jacobi { alpha, gamma } => (alpha.clone(), gamma.clone(), q.int(1)),
            FamilySpec::Legendre => (q.zero(), q.zero(), q.int(1)),
            FamilySpec::ChebyshevU => (q.ratio(1, 2), q.ratio(1, 2), q.int(1)),
            FamilySpec::Semicircle => (q.ratio(1, 2), q.ratio(1, 2), q.int(2)),
            FamilySpec::Charlier { .. } => return None,
        };
        Some(JacobiShape {
            alpha,
            gamma,
            lo: -&half,
            hi: half,
        })
    }

    /// Lazy monic recurrence in `backend`.
    pub fn recurrence(&self, backend: Backend) -> Result<RecurrenceCoefficients> {
        self.validate()?;
        let generator: Arc<dyn CoefficientGenerator> = match self {
            FamilySpec::Charlier { lambda } => Arc::new(CharlierGenerator { lambda: lambda.clone() }),
            _ => {
                let s = self.jacobi_shape().expect("non-Charlier families are Jacobi-type");
                Arc::new(JacobiGenerator {
                    alpha: s.alpha,
                    gamma: s.gamma,
                    lo: s.lo,
                    hi: s.hi,
                })
            }
        };
        Ok(RecurrenceCoefficients::from_generator(generator, backend))
    }

    /// The orthogonality measure, with its recurrence attached so that
    /// continuous measures can use Gauss rules.
    pub fn measure(&self, backend: Backend) -> Result<MeasureSpec> {
        let rc = self.recurrence(backend)?;
        let spec = match self {
            FamilySpec::Charlier { lambda } => {
                MeasureSpec::discrete(AtomSet::Poisson { lambda: lambda.clone() }, self.name())
            }
            _ => {
                let s = self.jacobi_shape().expect("Jacobi-type");
                let density = Arc::new(JacobiDensity::new(s.alpha, s.gamma, &s.lo, &s.hi));
                MeasureSpec::continuous(density, s.lo, s.hi, self.name())
            }
        };
        Ok(spec.with_recurrence(rc))
    }

    /// `C` of the catalog divisor, where a closed form exists.
    pub fn reference_normalization(&self, divisor: &DivisorSpec, backend: Backend) -> Result<Scalar> {
        match self.closed_form(divisor, backend)? {
            ClosedForm::JacobiEndpoint { c, .. } | ClosedForm::SymmetricJacobi { c, .. } => Ok(c),
            ClosedForm::Charlier { lambda } => {
                let lam = lambda.to_backend(backend.float_or(crate::scalar::DEFAULT_PRECISION))?;
                let e = lam.exp()?;
                Ok(&lam * &e / (e - lam.int_like(1)))
            }
            ClosedForm::KestenMcKay { c, .. } => Ok(c),
        }
    }

    /// Closed-form `κ_n` for the catalog (family, divisor) pairs.
    pub fn reference_kappa(&self, divisor: &DivisorSpec, n: usize, backend: Backend) -> Result<Scalar> {
        assert!(n >= 1, "kappa is indexed from 1");
        match self.closed_form(divisor, backend)? {
            ClosedForm::JacobiEndpoint { alpha, gamma, scale, reflected, .. } => {
                let w = alpha.backend();
                let nn = w.int(n as i64);
                let s = &alpha + &gamma;
                let two_n = &nn + &nn;
                let k = -(w.int(2) * &nn * (&nn + &gamma)) / ((&s + &two_n) * (&s + &two_n - w.one()));
                let k = scale * k;
                (if reflected { -k } else { k }).to_backend(backend)
            }
            ClosedForm::Charlier { lambda } => {
                let p = backend.precision().ok_or(Error::BackendUnsupported("charlier reference kappa"))?;
                let lam = lambda.to_backend(Backend::float(p + 32))?;
                let t_n = poisson_tail(&lam, n, p + 32);
                let t_next = poisson_tail(&lam, n + 1, p + 32);
                (lam.int_like(n as i64) * t_next / t_n).to_backend(backend)
            }
            ClosedForm::SymmetricJacobi { .. } => Ok(backend.zero()),
            ClosedForm::KestenMcKay { c, d, .. } => (d / (c + backend.int(2))).to_backend(backend),
        }
    }

    /// Closed-form `λ_n` (with `λ_1 = 0`) for quadratic catalog divisors.
    pub fn reference_lambda(&self, divisor: &DivisorSpec, n: usize, backend: Backend) -> Result<Scalar> {
        assert!(n >= 1, "lambda is indexed from 1");
        if n == 1 {
            return Ok(backend.zero());
        }
        match self.closed_form(divisor, backend)? {
            ClosedForm::SymmetricJacobi { a, scale, .. } => {
                let w = a.backend();
                let nn = w.int(n as i64);
                let two_a = &a + &a;
                let two_n = &nn + &nn;
                let l = -(&nn * (&nn - w.one())) / ((&two_a + &two_n - w.one()) * (&two_a + &two_n - w.int(3)));
                (scale.square() * l).to_backend(backend)
            }
            ClosedForm::KestenMcKay { c, .. } => (c + backend.one()).recip().to_backend(backend),
            _ => Ok(backend.zero()),
        }
    }

    /// Closed-form Fourier coefficient `f_n` of `C/(x+D)` in the `b_n` basis.
    pub fn reference_fourier(&self, divisor: &DivisorSpec, n: usize, backend: Backend) -> Result<Scalar> {
        if n == 0 {
            return Ok(backend.one());
        }
        match self.closed_form(divisor, backend)? {
            ClosedForm::JacobiEndpoint {
                alpha,
                gamma,
                scale,
                reflected,
                ..
            } => {
                let w = alpha.backend();
                let one = w.one();
                let s = &alpha + &gamma;
                let f = pochhammer(&(&s + w.int(2)), 2 * n)
                    / (w.int(2).pow_int(n as i32)
                        * pochhammer(&(&alpha + &one), n)
                        * pochhammer(&(&s + &one), n));
                let f = f / scale.pow_int(n as i32);
                let f = if reflected && n % 2 == 1 { -f } else { f };
                f.to_backend(backend)
            }
            ClosedForm::Charlier { lambda } => {
                let p = backend.precision().ok_or(Error::BackendUnsupported("charlier reference fourier"))?;
                let lam = lambda.to_backend(Backend::float(p + 32))?;
                let product = poisson_tail(&lam, n + 1, p + 32)
                    / (poisson_tail(&lam, 1, p + 32) * lam.pow_int(n as i32));
                let sign = if n % 2 == 1 { -product.int_like(1) } else { product.int_like(1) };
                (sign * product).to_backend(backend)
            }
            _ => Err(Error::NoClosedForm(format!("Fourier coefficients of {}", self.name()))),
        }
    }

    fn closed_form(&self, divisor: &DivisorSpec, backend: Backend) -> Result<ClosedForm> {
        self.validate()?;
        let missing = || Error::NoClosedForm(format!("{} with this divisor", self.name()));
        match (self, &divisor.kind) {
            (FamilySpec::Charlier { lambda }, DivisorKind::Linear { d }) => {
                if *d == d.int_like(1) {
                    Ok(ClosedForm::Charlier { lambda: lambda.clone() })
                } else {
                    Err(missing())
                }
            }
            (FamilySpec::Charlier { .. }, _) => Err(missing()),
            (_, DivisorKind::Linear { d }) => {
                let shape = self.jacobi_shape().expect("Jacobi-type");
                let scale = shape.scale();
                let (alpha, gamma, reflected) = if *d == -&shape.hi {
                    (shape.alpha.clone(), shape.gamma.clone(), false)
                } else if *d == -&shape.lo {
                    (shape.gamma.clone(), shape.alpha.clone(), true)
                } else {
                    return Err(missing());
                };
                let s = &alpha + &gamma;
                if alpha.is_zero() || (&s + s.int_like(1)).is_zero() {
                    return Err(Error::InvalidDivisor(format!(
                        "no positive normalization for exponents ({alpha}, {gamma})"
                    )));
                }
                let c = -(alpha.int_like(2) * &alpha) / (&s + s.int_like(1)) * &scale;
                let c = if reflected { -c } else { c };
                check_given(divisor, &c)?;
                Ok(ClosedForm::JacobiEndpoint {
                    alpha,
                    gamma,
                    scale,
                    reflected,
                    c,
                })
            }
            (FamilySpec::Semicircle, DivisorKind::Quadratic { d, e }) if !d.is_zero() || *e != e.int_like(-4) => {
                let c = divisor.c()?.clone();
                let one = c.int_like(1);
                let two = c.int_like(2);
                let expected = c.square() / (&c + &one) + d.square() * (&c + &one) / (&c + &two).square();
                let mismatch = (&expected - e).abs();
                let tiny = match backend.join(expected.backend()).precision() {
                    None => mismatch.is_zero(),
                    Some(p) => mismatch.to_f64() <= 2f64.powi(-(p as i32) / 2) * (1.0 + e.abs().to_f64()),
                };
                if !tiny {
                    return Err(missing());
                }
                Ok(ClosedForm::KestenMcKay {
                    c,
                    d: d.clone(),
                    e: e.clone(),
                })
            }
            (_, DivisorKind::Quadratic { d, e }) => {
                let shape = self.jacobi_shape().expect("Jacobi-type");
                let scale = shape.scale();
                if shape.alpha != shape.gamma || !d.is_zero() || *e != -scale.square() {
                    return Err(missing());
                }
                let a = shape.alpha.clone();
                if a.is_zero() {
                    return Err(Error::InvalidDivisor("a = 0 gives C = 0".into()));
                }
                let c = -(&a + &a) / (&a + &a + a.int_like(1)) * scale.square();
                check_given(divisor, &c)?;
                Ok(ClosedForm::SymmetricJacobi { a, scale, c })
            }
            (_, DivisorKind::Monic { .. }) => Err(missing()),
        }
    }
}

enum ClosedForm {
    JacobiEndpoint {
        alpha: Scalar,
        gamma: Scalar,
        scale: Scalar,
        reflected: bool,
        c: Scalar,
    },
    Charlier {
        lambda: Scalar,
    },
    SymmetricJacobi {
        a: Scalar,
        scale: Scalar,
        c: Scalar,
    },
    KestenMcKay {
        c: Scalar,
        d: Scalar,
        #[allow(dead_code)]
        e: Scalar,
    },
}

fn check_given(divisor: &DivisorSpec, c: &Scalar) -> Result<()> {
    if let Normalization::Given(given) = &divisor.normalization {
        let diff = (given - c).abs();
        let ok = match diff.backend().precision() {
            None => diff.is_zero(),
            Some(p) => diff.to_f64() <= 2f64.powi(-(p as i32) / 2) * c.abs().to_f64(),
        };
        if !ok {
            return Err(Error::NoClosedForm(format!("divisor with C = {given} (catalog value {c})")));
        }
    }
    Ok(())
}

/// Rising factorial `(a)_n`.
pub fn pochhammer(a: &Scalar, n: usize) -> Scalar {
    let mut acc = a.int_like(1);
    for k in 0..n {
        acc = acc * (a + a.int_like(k as i64));
    }
    acc
}

/// `Σ_{j ≥ n} λ^j / j!` summed directly at `precision` bits.
pub fn poisson_tail(lambda: &Scalar, n: usize, precision: u32) -> Scalar {
    let b = Backend::float(precision);
    let lam = lambda.to_backend(b).expect("float conversion");
    let mut term = b.one();
    for j in 1..=n {
        term = term * &lam / b.int(j as i64);
    }
    let mut sum = b.zero();
    let eps = b.epsilon().expect("float backend");
    let mut j = n;
    loop {
        sum = &sum + &term;
        j += 1;
        term = term * &lam / b.int(j as i64);
        if j as f64 > lambda.to_f64() && term.abs() <= &eps * sum.abs() {
            break;
        }
    }
    sum
}
