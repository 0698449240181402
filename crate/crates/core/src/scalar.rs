//! Real numbers in one of two backends: exact rationals or MPFR floats.
//!
//! Arithmetic between two values promotes to the wider backend: rational op
//! rational stays rational, anything touching a float becomes a float at the
//! larger of the participating precisions. Transcendental operations (square
//! root, exp, ln, gamma) are only defined on the float backend.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

/// Working precision used when nothing else is specified.
pub const DEFAULT_PRECISION: u32 = 128;

/// Numeric backend selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    Rational,
    Float { precision: u32 },
}

impl Backend {
    pub fn float(precision: u32) -> Self {
        Backend::Float { precision }
    }

    pub fn precision(self) -> Option<u32> {
        match self {
            Backend::Rational => None,
            Backend::Float { precision } => Some(precision),
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Backend::Rational)
    }

    /// Smallest backend able to represent values of both operands.
    pub fn join(self, other: Backend) -> Backend {
        match (self, other) {
            (Backend::Rational, Backend::Rational) => Backend::Rational,
            (Backend::Float { precision }, Backend::Rational)
            | (Backend::Rational, Backend::Float { precision }) => Backend::Float { precision },
            (Backend::Float { precision: a }, Backend::Float { precision: b }) => {
                Backend::Float { precision: a.max(b) }
            }
        }
    }

    /// Float backend used for quadrature: the float precision itself, or
    /// `fallback` bits for the rational backend.
    pub fn float_or(self, fallback: u32) -> Backend {
        Backend::Float {
            precision: self.precision().unwrap_or(fallback),
        }
    }

    pub fn int(self, value: i64) -> Scalar {
        match self {
            Backend::Rational => Scalar::Exact(Rational::from(value)),
            Backend::Float { precision } => Scalar::Float(Float::with_val(precision, value)),
        }
    }

    pub fn ratio(self, num: i64, den: i64) -> Scalar {
        assert!(den != 0, "zero denominator");
        let q = Rational::from((num, den));
        match self {
            Backend::Rational => Scalar::Exact(q),
            Backend::Float { precision } => Scalar::Float(Float::with_val(precision, &q)),
        }
    }

    pub fn zero(self) -> Scalar {
        self.int(0)
    }

    pub fn one(self) -> Scalar {
        self.int(1)
    }

    /// Converts an `f64` exactly (every finite double is a dyadic rational).
    pub fn from_f64(self, value: f64) -> Result<Scalar> {
        let q = Rational::from_f64(value).ok_or_else(|| Error::InvalidNumber(value.to_string()))?;
        Ok(Scalar::Exact(q).to_backend(self)?)
    }

    pub fn pi(self) -> Result<Scalar> {
        match self {
            Backend::Rational => Err(Error::BackendUnsupported("pi")),
            Backend::Float { precision } => Ok(Scalar::Float(Float::with_val(precision, Constant::Pi))),
        }
    }

    /// Machine epsilon `2^-p` of the float backend; `None` for exact arithmetic.
    pub fn epsilon(self) -> Option<Scalar> {
        self.precision().map(|p| {
            let mut e = Float::with_val(p, 1);
            e >>= p;
            Scalar::Float(e)
        })
    }

    /// Parses `"3"`, `"-5/2"`, `"0.25"`, `"1e-3"` into this backend.
    ///
    /// Decimal literals become exact rationals first, so `"0.1"` is exactly
    /// one tenth in the rational backend.
    pub fn parse(self, text: &str) -> Result<Scalar> {
        let q = parse_rational(text.trim())?;
        Scalar::Exact(q).to_backend(self)
    }
}

fn parse_rational(text: &str) -> Result<Rational> {
    let bad = || Error::InvalidNumber(text.to_string());
    if text.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = text.split_once('/') {
        let num = parse_rational(num.trim())?;
        let den = parse_rational(den.trim())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(num / den);
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = text[pos + 1..].parse().map_err(|_| bad())?;
            (&text[..pos], exp)
        }
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from(Integer::from_str(&all_digits).map_err(|_| bad())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = Rational::from(10);
    let factor = Rational::from(ten.pow(scale.unsigned_abs()));
    if scale >= 0 {
        value *= factor;
    } else {
        value /= factor;
    }
    if negative {
        value = -value;
    }
    Ok(value)
}

/// A real number in the exact or the floating-point backend.
#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(Rational),
    Float(Float),
}

impl Scalar {
    pub fn backend(&self) -> Backend {
        match self {
            Scalar::Exact(_) => Backend::Rational,
            Scalar::Float(f) => Backend::Float { precision: f.prec() },
        }
    }

    /// Re-expresses the value in `backend`. Floats cannot be demoted to rationals.
    pub fn to_backend(&self, backend: Backend) -> Result<Scalar> {
        match (self, backend) {
            (Scalar::Exact(q), Backend::Rational) => Ok(Scalar::Exact(q.clone())),
            (Scalar::Exact(q), Backend::Float { precision }) => {
                Ok(Scalar::Float(Float::with_val(precision, q)))
            }
            (Scalar::Float(f), Backend::Float { precision }) => {
                Ok(Scalar::Float(Float::with_val(precision, f)))
            }
            (Scalar::Float(_), Backend::Rational) => {
                Err(Error::BackendUnsupported("float to rational conversion"))
            }
        }
    }

    /// Same value at (at least) `precision` bits; rationals are rounded.
    pub fn to_float(&self, precision: u32) -> Float {
        match self {
            Scalar::Exact(q) => Float::with_val(precision, q),
            Scalar::Float(f) => Float::with_val(precision.max(f.prec()), f),
        }
    }

    /// A constant of the same backend as `self`.
    pub fn int_like(&self, value: i64) -> Scalar {
        self.backend().int(value)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(q) => *q == 0,
            Scalar::Float(f) => f.is_zero(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Scalar::Exact(_) => true,
            Scalar::Float(f) => f.is_finite(),
        }
    }

    /// Sign as -1, 0 or 1 (NaN reports 0).
    pub fn signum(&self) -> i32 {
        let ord = match self {
            Scalar::Exact(q) => Some(q.cmp0()),
            Scalar::Float(f) => f.cmp0(),
        };
        match ord {
            Some(Ordering::Less) => -1,
            Some(Ordering::Greater) => 1,
            _ => 0,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(q.clone().abs()),
            Scalar::Float(f) => Scalar::Float(f.clone().abs()),
        }
    }

    pub fn square(&self) -> Scalar {
        self * self
    }

    pub fn recip(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(q.clone().recip()),
            Scalar::Float(f) => Scalar::Float(f.clone().recip()),
        }
    }

    /// `self / rhs`, or `None` when `rhs` is exactly zero.
    pub fn checked_div(&self, rhs: &Scalar) -> Option<Scalar> {
        if rhs.is_zero() {
            None
        } else {
            Some(self / rhs)
        }
    }

    pub fn pow_int(&self, exponent: i32) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(Rational::from(q.pow(exponent))),
            Scalar::Float(f) => Scalar::Float(Float::with_val(f.prec(), f.pow(exponent))),
        }
    }

    pub fn max(self, other: Scalar) -> Scalar {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Scalar) -> Scalar {
        if other < self {
            other
        } else {
            self
        }
    }

    fn float_only(&self, op: &'static str) -> Result<&Float> {
        match self {
            Scalar::Exact(_) => Err(Error::BackendUnsupported(op)),
            Scalar::Float(f) => Ok(f),
        }
    }

    pub fn sqrt(&self) -> Result<Scalar> {
        let f = self.float_only("sqrt")?;
        Ok(Scalar::Float(Float::with_val(f.prec(), f.sqrt_ref())))
    }

    pub fn exp(&self) -> Result<Scalar> {
        let f = self.float_only("exp")?;
        Ok(Scalar::Float(Float::with_val(f.prec(), f.exp_ref())))
    }

    pub fn ln(&self) -> Result<Scalar> {
        let f = self.float_only("ln")?;
        Ok(Scalar::Float(Float::with_val(f.prec(), f.ln_ref())))
    }

    pub fn gamma(&self) -> Result<Scalar> {
        let f = self.float_only("gamma")?;
        Ok(Scalar::Float(Float::with_val(f.prec(), f.gamma_ref())))
    }

    /// `self^exponent` for a real exponent; `self` must be float.
    pub fn powf(&self, exponent: &Scalar) -> Result<Scalar> {
        let base = self.float_only("powf")?;
        let p = base.prec();
        let value = match exponent {
            Scalar::Exact(q) => {
                if *q.denom() == 1 {
                    if let Some(k) = q.numer().to_i32() {
                        return Ok(Scalar::Float(Float::with_val(p, base.pow(k))));
                    }
                }
                Float::with_val(p, base.pow(&Float::with_val(p, q)))
            }
            Scalar::Float(e) => Float::with_val(p.max(e.prec()), base.pow(e)),
        };
        Ok(Scalar::Float(value))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => q.to_f64(),
            Scalar::Float(f) => f.to_f64(),
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(q) => Some(q),
            Scalar::Float(_) => None,
        }
    }

    pub fn as_float(&self) -> Option<&Float> {
        match self {
            Scalar::Float(f) => Some(f),
            Scalar::Exact(_) => None,
        }
    }

    /// Short human-readable rendering with `digits` significant digits.
    pub fn display_rounded(&self, digits: usize) -> String {
        let f = self.to_float(64.max(self.backend().precision().unwrap_or(64)));
        if f.is_zero() {
            return "0".to_string();
        }
        format!("{:.*e}", digits.saturating_sub(1), f)
    }
}

impl fmt::Display for Scalar {
    /// Full working precision: `p/q` for rationals, all significant decimal
    /// digits for floats.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => write!(f, "{q}"),
            Scalar::Float(x) => write!(f, "{x}"),
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Some(a.cmp(b)),
            (Scalar::Float(a), Scalar::Float(b)) => a.partial_cmp(b),
            (Scalar::Float(a), Scalar::Exact(b)) => a.partial_cmp(b),
            (Scalar::Exact(a), Scalar::Float(b)) => b.partial_cmp(a).map(Ordering::reverse),
        }
    }
}

impl From<Rational> for Scalar {
    fn from(q: Rational) -> Self {
        Scalar::Exact(q)
    }
}

impl From<Float> for Scalar {
    fn from(f: Float) -> Self {
        Scalar::Float(f)
    }
}

fn add(a: &Scalar, b: &Scalar) -> Scalar {
    match (a, b) {
        (Scalar::Exact(x), Scalar::Exact(y)) => Scalar::Exact(Rational::from(x + y)),
        (Scalar::Float(x), Scalar::Float(y)) => {
            Scalar::Float(Float::with_val(x.prec().max(y.prec()), x + y))
        }
        (Scalar::Float(x), Scalar::Exact(y)) | (Scalar::Exact(y), Scalar::Float(x)) => {
            Scalar::Float(Float::with_val(x.prec(), x + y))
        }
    }
}

fn sub(a: &Scalar, b: &Scalar) -> Scalar {
    match (a, b) {
        (Scalar::Exact(x), Scalar::Exact(y)) => Scalar::Exact(Rational::from(x - y)),
        (Scalar::Float(x), Scalar::Float(y)) => {
            Scalar::Float(Float::with_val(x.prec().max(y.prec()), x - y))
        }
        (Scalar::Float(x), Scalar::Exact(y)) => Scalar::Float(Float::with_val(x.prec(), x - y)),
        (Scalar::Exact(x), Scalar::Float(y)) => Scalar::Float(Float::with_val(y.prec(), x - y)),
    }
}

fn mul(a: &Scalar, b: &Scalar) -> Scalar {
    match (a, b) {
        (Scalar::Exact(x), Scalar::Exact(y)) => Scalar::Exact(Rational::from(x * y)),
        (Scalar::Float(x), Scalar::Float(y)) => {
            Scalar::Float(Float::with_val(x.prec().max(y.prec()), x * y))
        }
        (Scalar::Float(x), Scalar::Exact(y)) | (Scalar::Exact(y), Scalar::Float(x)) => {
            Scalar::Float(Float::with_val(x.prec(), x * y))
        }
    }
}

fn div(a: &Scalar, b: &Scalar) -> Scalar {
    match (a, b) {
        (Scalar::Exact(x), Scalar::Exact(y)) => {
            assert!(*y != 0, "exact division by zero");
            Scalar::Exact(Rational::from(x / y))
        }
        (Scalar::Float(x), Scalar::Float(y)) => {
            Scalar::Float(Float::with_val(x.prec().max(y.prec()), x / y))
        }
        (Scalar::Float(x), Scalar::Exact(y)) => Scalar::Float(Float::with_val(x.prec(), x / y)),
        (Scalar::Exact(x), Scalar::Float(y)) => Scalar::Float(Float::with_val(y.prec(), x / y)),
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $imp:ident) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                $imp(self, rhs)
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                $imp(&self, &rhs)
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                $imp(&self, rhs)
            }
        }
        impl $trait<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                $imp(self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, add);
forward_binop!(Sub, sub, sub);
forward_binop!(Mul, mul, mul);
forward_binop!(Div, div, div);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(-q),
            Scalar::Float(f) => Scalar::Float(-f),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -self.clone()
    }
}

/// `|a - b| / max(|a|, |b|, floor)`, evaluated at the wider backend.
pub fn relative_difference(a: &Scalar, b: &Scalar, floor: &Scalar) -> Scalar {
    let scale = a.abs().max(b.abs()).max(floor.abs());
    if scale.is_zero() {
        return a.int_like(0);
    }
    (a - b).abs() / scale
}
