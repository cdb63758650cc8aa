//! Number fields the dynamics runs over: exact rationals and certified
//! intervals.

mod factored;
mod interval;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use factored::{factor, FactoredRational};
pub use interval::Interval;

/// Arithmetic shared by the exact and the interval backend.
///
/// `sign` returns `None` when the backend cannot decide (an interval that
/// straddles zero); callers escalate precision in that case.
pub trait Real:
    Clone
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + Sub<Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + Mul<Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + Div<Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + Neg<Output = Self>
{
    const EXACT: bool;

    fn from_rational(q: &Rational, prec: u32) -> Self;

    /// `base^exp`, or `None` when the backend cannot represent it.
    fn base_pow(base: &Base, exp: &Rational, prec: u32) -> Option<Self>;

    fn sign(&self) -> Option<Ordering>;

    /// Square root, `None` when it leaves the field.
    fn sqrt(&self) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Half-width of the enclosure; zero for exact values.
    fn radius(&self) -> f64;

    /// Working precision in bits; zero for exact values.
    fn precision(&self) -> u32;

    /// Text form: `p/q` for rationals, midpoint decimal for intervals.
    fn render(&self) -> String;

    /// The exact value, when there is one.
    fn exact(&self) -> Option<Rational>;

    /// Certified enclosure at `prec` bits.
    fn to_interval(&self, prec: u32) -> Interval;

    /// An enclosure taken into the field; exact fields accept points only.
    fn from_interval(v: &Interval) -> Option<Self>;

    /// `num/den · Π p^e`. Exact backends may keep the prime powers apart.
    fn from_parts(num: Integer, den: Integer, smooth: &[(u64, i64)], prec: u32) -> Self {
        let mut q = Rational::from((num, den));
        for &(p, e) in smooth {
            let pe = Integer::from(p).pow(e.unsigned_abs() as u32);
            if e >= 0 {
                q *= pe;
            } else {
                q /= pe;
            }
        }
        Self::from_rational(&q, prec)
    }

    fn from_i64(v: i64, prec: u32) -> Self {
        Self::from_rational(&Rational::from(v), prec)
    }

    fn abs(&self) -> Self {
        match self.sign() {
            Some(Ordering::Less) => -self.clone(),
            _ => self.clone(),
        }
    }

    fn square(&self) -> Self {
        self.clone() * self
    }
}

/// Certified comparison of two values.
pub fn compare<R: Real>(a: &R, b: &R) -> Option<Ordering> {
    (a.clone() - b).sign()
}

/// True unless the two values are certainly different.
pub fn maybe_equal<R: Real>(a: &R, b: &R) -> bool {
    !matches!(compare(a, b), Some(Ordering::Less | Ordering::Greater))
}

impl Real for Rational {
    const EXACT: bool = true;

    fn from_parts(num: Integer, den: Integer, smooth: &[(u64, i64)], _prec: u32) -> Self {
        let (mut num, mut den) = if den.cmp0() == Ordering::Less { (-num, -den) } else { (num, den) };
        let mut atoms = Integer::from(1);
        for &(p, e) in smooth {
            atoms *= p;
            let pe = Integer::from(p).pow(e.unsigned_abs() as u32);
            if e > 0 {
                num *= pe;
            } else if e < 0 {
                den *= pe;
            }
        }
        // every prime shared by num and den divides `atoms`
        loop {
            let g = Integer::from(num.gcd_ref(&atoms)).gcd(&den);
            if g == 1 {
                break;
            }
            num.div_exact_mut(&g);
            den.div_exact_mut(&g);
        }
        // SAFETY: no common prime is left and den > 0.
        unsafe { Rational::from_canonical(num, den) }
    }

    fn from_rational(q: &Rational, _prec: u32) -> Self {
        q.clone()
    }

    fn base_pow(base: &Base, exp: &Rational, _prec: u32) -> Option<Self> {
        exact_pow(base.as_rational()?, exp)
    }

    fn sign(&self) -> Option<Ordering> {
        Some(self.cmp0())
    }

    fn sqrt(&self) -> Option<Self> {
        if self.cmp0() == Ordering::Less {
            return None;
        }
        let n = self.numer().clone().sqrt();
        let d = self.denom().clone().sqrt();
        let r = Rational::from((n, d));
        (r.clone() * &r == *self).then_some(r)
    }

    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }

    fn radius(&self) -> f64 {
        0.0
    }

    fn precision(&self) -> u32 {
        0
    }

    fn render(&self) -> String {
        self.to_string()
    }

    fn exact(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn to_interval(&self, prec: u32) -> Interval {
        Interval::from_rational(self, prec)
    }

    fn from_interval(v: &Interval) -> Option<Self> {
        v.exact()
    }
}

impl Real for Interval {
    const EXACT: bool = false;

    fn from_rational(q: &Rational, prec: u32) -> Self {
        Interval::from_rational(q, prec)
    }

    fn base_pow(base: &Base, exp: &Rational, prec: u32) -> Option<Self> {
        Some(base.pow_interval(exp, prec))
    }

    fn sign(&self) -> Option<Ordering> {
        Interval::sign(self)
    }

    fn sqrt(&self) -> Option<Self> {
        (self.lo().cmp0() != Some(Ordering::Less) || self.hi().cmp0() != Some(Ordering::Less))
            .then(|| Interval::sqrt(self))
    }

    fn to_f64(&self) -> f64 {
        Interval::to_f64(self)
    }

    fn radius(&self) -> f64 {
        self.rad()
    }

    fn precision(&self) -> u32 {
        self.prec()
    }

    fn render(&self) -> String {
        self.mid_string()
    }

    fn exact(&self) -> Option<Rational> {
        if self.lo() == self.hi() {
            self.lo().to_rational()
        } else {
            None
        }
    }

    fn to_interval(&self, prec: u32) -> Interval {
        if prec > self.prec() {
            self.clone()
        } else {
            self.with_prec(prec)
        }
    }

    fn from_interval(v: &Interval) -> Option<Self> {
        Some(v.clone())
    }

    fn abs(&self) -> Self {
        Interval::abs(self)
    }

    fn square(&self) -> Self {
        Interval::square(self)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("not a number: {0:?}")]
    Malformed(String),
    #[error("base must be greater than 1, got {0}")]
    BaseTooSmall(String),
    #[error("mantissa must be non-negative, got {0}")]
    NegativeMantissa(String),
}

/// Parses `12`, `-3.25`, `7/2` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational, ParseError> {
    let bad = || ParseError::Malformed(s.to_string());
    let t = s.trim();
    if t.contains('/') {
        return Rational::from_str(t).map_err(|_| bad());
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num = Integer::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let den = Integer::from(10).pow(frac.len() as u32);
    let q = Rational::from((num, den));
    Ok(if neg { -q } else { q })
}

/// A base for the mass ratio `b^(2N)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Base {
    Exact(Rational),
    Phi,
    E,
    Pi,
}

impl Base {
    pub fn integer(b: u32) -> Self {
        Base::Exact(Rational::from(b))
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Base::Exact(q) => Some(q),
            _ => None,
        }
    }

    /// Certified enclosure of the base.
    pub fn interval(&self, prec: u32) -> Interval {
        match self {
            Base::Exact(q) => Interval::from_rational(q, prec),
            Base::Phi => Interval::phi(prec),
            Base::E => Interval::e(prec),
            Base::Pi => Interval::pi(prec),
        }
    }

    /// log2 of the base, good enough for sizing precision.
    pub fn log2_approx(&self) -> f64 {
        match self {
            Base::Exact(q) => q.to_f64().log2(),
            Base::Phi => 0.6942419136306174,
            Base::E => std::f64::consts::LOG2_E,
            Base::Pi => 1.651496129472319,
        }
    }

    /// Largest admissible digit plus one: `ceil(b)`.
    pub fn digit_bound(&self) -> u32 {
        match self {
            Base::Exact(q) => {
                let c = q.clone().ceil();
                c.numer().to_u32().unwrap_or(u32::MAX)
            }
            Base::Phi => 2,
            Base::E => 3,
            Base::Pi => 4,
        }
    }

    /// Integer value of the base when it is one.
    pub fn as_integer(&self) -> Option<u32> {
        let q = self.as_rational()?;
        if *q.denom() == 1 {
            q.numer().to_u32()
        } else {
            None
        }
    }

    /// `b^exp` as a certified interval.
    pub fn pow_interval(&self, exp: &Rational, prec: u32) -> Interval {
        if let Some(q) = self.as_rational() {
            if let Some(v) = exact_pow(q, exp) {
                return Interval::from_rational(&v, prec);
            }
        }
        let work = prec + 16;
        let b = self.interval(work);
        let r = if *exp.denom() == 1 && exp.numer().to_u32().is_some() {
            b.pow_u(exp.numer().to_u32().unwrap_or(0))
        } else {
            (b.ln() * Interval::from_rational(exp, work)).exp()
        };
        r.with_prec(prec)
    }

    /// True when `b^(2N)` is rational, i.e. exact mode is available.
    pub fn mass_ratio_is_rational(&self, mantissa: &Rational) -> bool {
        match self {
            Base::Exact(q) => exact_pow(q, &(mantissa.clone() * 2u32)).is_some(),
            _ => mantissa.cmp0() == Ordering::Equal,
        }
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Base::Exact(q) if *q.denom() == 1 => write!(f, "{}", q.numer()),
            Base::Exact(q) => write!(f, "{}", decimal_or_fraction(q)),
            Base::Phi => f.write_str("phi"),
            Base::E => f.write_str("e"),
            Base::Pi => f.write_str("pi"),
        }
    }
}

/// Terminating decimals print as decimals, everything else as `p/q`.
pub fn decimal_or_fraction(q: &Rational) -> String {
    let mut d = q.denom().clone();
    let mut k = 0u32;
    for p in [2u32, 5] {
        while d.is_divisible_u(p) {
            d /= p;
        }
    }
    if d != 1 {
        return q.to_string();
    }
    while !Integer::from(10).pow(k).is_divisible(q.denom()) {
        k += 1;
    }
    let scaled = Rational::from(q * Integer::from(10).pow(k));
    let s = scaled.numer().clone().abs().to_string();
    let s = format!("{:0>width$}", s, width = k as usize + 1);
    let (a, b) = s.split_at(s.len() - k as usize);
    let sign = if q.cmp0() == Ordering::Less { "-" } else { "" };
    if b.is_empty() {
        format!("{sign}{a}")
    } else {
        format!("{sign}{a}.{b}")
    }
}

impl FromStr for Base {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        let b = match s.trim().to_ascii_lowercase().as_str() {
            "phi" | "φ" | "golden" => Base::Phi,
            "e" => Base::E,
            "pi" | "π" => Base::Pi,
            _ => Base::Exact(parse_rational(s)?),
        };
        if let Base::Exact(q) = &b {
            if *q <= 1 {
                return Err(ParseError::BaseTooSmall(s.to_string()));
            }
        }
        Ok(b)
    }
}

impl Serialize for Base {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Base {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a non-negative mantissa.
pub fn parse_mantissa(s: &str) -> Result<Rational, ParseError> {
    let q = parse_rational(s)?;
    if q.cmp0() == Ordering::Less {
        return Err(ParseError::NegativeMantissa(s.to_string()));
    }
    Ok(q)
}

/// Exact `b^(p/q)` when it is rational.
pub fn exact_pow(b: &Rational, exp: &Rational) -> Option<Rational> {
    let p = exp.numer().to_i32()?;
    let q = exp.denom().to_u32()?;
    if b.cmp0() != Ordering::Greater {
        return None;
    }
    let root = |v: &Integer| -> Option<Integer> {
        let r = v.clone().root(q);
        (r.clone().pow(q) == *v).then_some(r)
    };
    let base = Rational::from((root(b.numer())?, root(b.denom())?));
    Some(base.pow(p))
}

/// Serde adapter writing rationals as `p/q` strings.
pub mod rational_string {
    use rug::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
