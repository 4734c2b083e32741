//! Distance values in two arithmetic modes.
//!
//! `Scalar::Exact` carries an arbitrary-precision rational and is used
//! whenever the pipeline only needs `+`, `*`, `max` and comparisons.
//! `Scalar::Float` appears once a fractional exponent leaves the rationals.
//! Float comparisons go through an absolute tolerance (`DEFAULT_TOL`).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Default absolute tolerance for float comparisons.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl FromStr for Mode {
    type Err = ParseScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(ParseScalarError::Literal(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseScalarError {
    #[error("cannot parse `{0}` as a number")]
    Literal(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

#[derive(Debug, Clone)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(BigRational::one())
    }

    pub fn int(n: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact `num / den`. Panics on a zero denominator.
    pub fn ratio(num: i64, den: i64) -> Self {
        Scalar::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn float(v: f64) -> Self {
        Scalar::Float(v)
    }

    /// `1 / 2^k`, exact.
    pub fn inv_pow2(k: u32) -> Self {
        Scalar::Exact(BigRational::new(BigInt::one(), BigInt::one() << k))
    }

    /// `1 / 3^k`, exact.
    pub fn inv_pow3(k: u32) -> Self {
        Scalar::Exact(BigRational::new(BigInt::one(), BigInt::from(3).pow(k)))
    }

    pub fn mode(&self) -> Mode {
        match self {
            Scalar::Exact(_) => Mode::Exact,
            Scalar::Float(_) => Mode::Float,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => rational_to_f64(r),
            Scalar::Float(v) => *v,
        }
    }

    pub fn to_float(&self) -> Scalar {
        Scalar::Float(self.to_f64())
    }

    /// Converts to the requested mode. Float to exact goes through the
    /// shortest decimal representation of the float.
    pub fn to_mode(&self, mode: Mode) -> Scalar {
        match (self, mode) {
            (Scalar::Exact(_), Mode::Exact) | (Scalar::Float(_), Mode::Float) => self.clone(),
            (Scalar::Exact(_), Mode::Float) => self.to_float(),
            (Scalar::Float(v), Mode::Exact) => parse_decimal(&format!("{v:?}")).map(Scalar::Exact).unwrap_or(Scalar::Float(*v)),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Float(v) => *v == 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_negative(),
            Scalar::Float(v) => *v < 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Scalar::Exact(_) => true,
            Scalar::Float(v) => v.is_finite(),
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
            Scalar::Float(v) => Scalar::Float(v.abs()),
        }
    }

    /// Exact total order in exact mode, `f64::total_cmp` otherwise.
    pub fn exact_cmp(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.cmp(b),
            _ => self.to_f64().total_cmp(&other.to_f64()),
        }
    }

    /// Comparison where float values within `tol` of each other are equal.
    /// Two exact values are always compared exactly.
    pub fn cmp_tol(&self, other: &Scalar, tol: f64) -> Ordering {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.cmp(b),
            _ => {
                let (a, b) = (self.to_f64(), other.to_f64());
                if (a - b).abs() <= tol {
                    Ordering::Equal
                } else {
                    a.total_cmp(&b)
                }
            }
        }
    }

    pub fn lt_tol(&self, other: &Scalar, tol: f64) -> bool {
        self.cmp_tol(other, tol) == Ordering::Less
    }

    pub fn le_tol(&self, other: &Scalar, tol: f64) -> bool {
        self.cmp_tol(other, tol) != Ordering::Greater
    }

    pub fn eq_tol(&self, other: &Scalar, tol: f64) -> bool {
        self.cmp_tol(other, tol) == Ordering::Equal
    }

    pub fn max_of(&self, other: &Scalar) -> Scalar {
        if self.exact_cmp(other) == Ordering::Less {
            other.clone()
        } else {
            self.clone()
        }
    }

    pub fn min_of(&self, other: &Scalar) -> Scalar {
        if self.exact_cmp(other) == Ordering::Greater {
            other.clone()
        } else {
            self.clone()
        }
    }

    /// Raises to a nonnegative exponent. Exact mode survives integral
    /// exponents and rational exponents `a/b` applied to perfect `b`-th
    /// powers; anything else is computed in float mode.
    pub fn pow(&self, e: &Exponent) -> Scalar {
        if let (Scalar::Exact(r), Some(k)) = (self, e.as_integer()) {
            return Scalar::Exact(r.pow(k as i32));
        }
        if let (Scalar::Exact(r), Exponent::Rational(q)) = (self, e) {
            if let Some(root) = exact_root(r, q.denom()) {
                if let Some(a) = q.numer().to_i32() {
                    return Scalar::Exact(root.pow(a));
                }
            }
        }
        let x = self.to_f64();
        if x == 0.0 {
            return Scalar::Float(0.0);
        }
        let y = match e {
            Exponent::Rational(q) if q.numer().is_one() && *q.denom() == BigInt::from(2) => x.sqrt(),
            Exponent::Rational(q) if q.numer().is_one() && *q.denom() == BigInt::from(3) => x.cbrt(),
            _ => x.powf(e.to_f64()),
        };
        Scalar::Float(y)
    }

    /// Division; `None` when the divisor is zero.
    pub fn checked_div(&self, other: &Scalar) -> Option<Scalar> {
        if other.is_zero() {
            return None;
        }
        Some(match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a / b),
            _ => Scalar::Float(self.to_f64() / other.to_f64()),
        })
    }
}

/// `r^(1/b)` when both parts of `r >= 0` are perfect `b`-th powers.
fn exact_root(r: &BigRational, b: &BigInt) -> Option<BigRational> {
    let b = b.to_u32().filter(|&b| (1..=64).contains(&b))?;
    if r.is_negative() {
        return None;
    }
    let root = |x: &BigInt| {
        let y = x.nth_root(b);
        (y.pow(b) == *x).then_some(y)
    };
    Some(BigRational::new(root(r.numer())?, root(r.denom())?))
}

fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Fallback for huge numerators/denominators: scale by powers of two.
    let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
    let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
    n / d
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    _ => Scalar::Float(self.to_f64() $op rhs.to_f64()),
                }
            }
        }
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                &self $op &rhs
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Div<&Scalar> for &Scalar {
    type Output = Scalar;
    /// Panics on division by an exact zero.
    fn div(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a / b),
            _ => Scalar::Float(self.to_f64() / rhs.to_f64()),
        }
    }
}

/// Structural equality: same mode and same value.
impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            (Scalar::Float(a), Scalar::Float(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Float(v) => write!(f, "{v:?}"),
        }
    }
}

/// `(L, [x * L])` with `L` the lcm of the denominators, when every value is exact.
pub fn common_denominator(values: &[Scalar]) -> Option<(BigInt, Vec<BigInt>)> {
    let rats: Vec<&BigRational> = values.iter().map(Scalar::as_rational).collect::<Option<_>>()?;
    let den = rats.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let nums = rats.iter().map(|r| r.numer() * (&den / r.denom())).collect();
    Some((den, nums))
}

/// The values over a common denominator as `i128`, when each numerator fits
/// in `i64` (so sums of up to `2^63` of them cannot overflow).
pub fn scaled_integers(values: &[Scalar]) -> Option<Vec<i128>> {
    let (_, nums) = common_denominator(values)?;
    nums.iter().map(|v| v.to_i64().map(i128::from)).collect()
}

/// Parses `p/q`, an integer, or a decimal literal (optionally with an
/// exponent) into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational, ParseScalarError> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n).ok_or_else(|| ParseScalarError::Literal(s.to_string()))?;
        let d = parse_decimal(d).ok_or_else(|| ParseScalarError::Literal(s.to_string()))?;
        if d.is_zero() {
            return Err(ParseScalarError::ZeroDenominator(s.to_string()));
        }
        return Ok(n / d);
    }
    parse_decimal(s).ok_or_else(|| ParseScalarError::Literal(s.to_string()))
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    if neg {
        numer = -numer;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * ten.pow(scale as u32))
    } else {
        BigRational::new(numer, ten.pow((-scale) as u32))
    };
    Some(value)
}

impl Scalar {
    /// Parses a literal into the requested mode.
    pub fn parse(s: &str, mode: Mode) -> Result<Scalar, ParseScalarError> {
        match mode {
            Mode::Exact => parse_rational(s).map(Scalar::Exact),
            Mode::Float => {
                if s.contains('/') {
                    parse_rational(s).map(|r| Scalar::Float(rational_to_f64(&r)))
                } else {
                    s.trim().parse::<f64>().map(Scalar::Float).map_err(|_| ParseScalarError::Literal(s.to_string()))
                }
            }
        }
    }
}

impl FromStr for Scalar {
    type Err = ParseScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scalar::parse(s, Mode::Exact)
    }
}

/// Exact scalars serialize as strings (`"1/4"`), floats as JSON numbers.
impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(_) => serializer.serialize_str(&self.to_string()),
            Scalar::Float(v) if v.is_finite() => serializer.serialize_f64(*v),
            Scalar::Float(v) => serializer.serialize_str(&v.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(deserializer)?;
        match v {
            serde_json::Value::String(s) => Scalar::parse(&s, Mode::Exact).map_err(serde::de::Error::custom),
            serde_json::Value::Number(n) => {
                n.as_f64().map(Scalar::Float).ok_or_else(|| serde::de::Error::custom("number out of range"))
            }
            other => Err(serde::de::Error::custom(format!("expected number or string, got {other}"))),
        }
    }
}

/// An exponent applied to distances: exact rational or float.
#[derive(Debug, Clone)]
pub enum Exponent {
    Rational(BigRational),
    Float(f64),
}

impl Exponent {
    pub fn one() -> Self {
        Exponent::Rational(BigRational::one())
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Exponent::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn is_one(&self) -> bool {
        match self {
            Exponent::Rational(r) => r.is_one(),
            Exponent::Float(v) => *v == 1.0,
        }
    }

    pub fn as_integer(&self) -> Option<u32> {
        match self {
            Exponent::Rational(r) if r.is_integer() && !r.is_negative() => r.numer().to_u32(),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Rational(r) => rational_to_f64(r),
            Exponent::Float(v) => *v,
        }
    }

    pub fn as_scalar(&self) -> Scalar {
        match self {
            Exponent::Rational(r) => Scalar::Exact(r.clone()),
            Exponent::Float(v) => Scalar::Float(*v),
        }
    }

    /// True when `0 < self <= 1`.
    pub fn in_unit_interval(&self) -> bool {
        match self {
            Exponent::Rational(r) => r.is_positive() && *r <= BigRational::one(),
            Exponent::Float(v) => *v > 0.0 && *v <= 1.0,
        }
    }

    /// Equality, exact when both are rational.
    pub fn eq_tol(&self, other: &Exponent, tol: f64) -> bool {
        self.as_scalar().eq_tol(&other.as_scalar(), tol)
    }
}

impl PartialEq for Exponent {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Exponent::Rational(a), Exponent::Rational(b)) => a == b,
            (Exponent::Float(a), Exponent::Float(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_scalar())
    }
}

impl FromStr for Exponent {
    type Err = ParseScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // Decimal literals are read exactly: "0.5" is 1/2.
        parse_rational(s).map(Exponent::Rational)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.as_scalar().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(match Scalar::deserialize(deserializer)? {
            Scalar::Exact(r) => Exponent::Rational(r),
            Scalar::Float(v) => Exponent::Float(v),
        })
    }
}
