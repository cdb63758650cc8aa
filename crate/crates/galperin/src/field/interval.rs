use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::{Constant, Round, Special};
use rug::{Float, Integer, Rational};

/// Closed interval `[lo, hi]` with MPFR endpoints rounded outward.
///
/// The result of a binary operation carries the larger precision of its
/// operands, so a value built at `p` bits keeps working at `p` bits.
#[derive(Clone, PartialEq)]
pub struct Interval {
    lo: Float,
    hi: Float,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.20e}, {:.20e}]", self.lo.to_f64(), self.hi.to_f64())
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {:.3e}", self.mid_string(), self.rad())
    }
}

macro_rules! rnd {
    ($prec:expr, $e:expr, $r:expr) => {
        Float::with_val_round($prec, $e, $r).0
    };
}

// negated comparisons keep NaN endpoints on the containing side
#[allow(clippy::neg_cmp_op_on_partial_ord)]
impl Interval {
    pub fn new(lo: Float, hi: Float) -> Self {
        debug_assert!(!(lo > hi));
        Interval { lo, hi }
    }

    pub fn point(v: Float) -> Self {
        Interval { lo: v.clone(), hi: v }
    }

    pub fn from_i64(v: i64) -> Self {
        Self::point(Float::with_val(64, v))
    }

    pub fn from_integer(v: &Integer, prec: u32) -> Self {
        let p = prec.max(v.significant_bits()).max(2);
        Interval {
            lo: rnd!(p, v, Round::Down),
            hi: rnd!(p, v, Round::Up),
        }
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        if *q.denom() == 1 {
            return Self::from_integer(q.numer(), prec);
        }
        Interval {
            lo: rnd!(prec, q, Round::Down),
            hi: rnd!(prec, q, Round::Up),
        }
    }

    pub fn entire(prec: u32) -> Self {
        Interval {
            lo: Float::with_val(prec, Special::NegInfinity),
            hi: Float::with_val(prec, Special::Infinity),
        }
    }

    pub fn pi(prec: u32) -> Self {
        Interval {
            lo: rnd!(prec, Constant::Pi, Round::Down),
            hi: rnd!(prec, Constant::Pi, Round::Up),
        }
    }

    /// Euler's number.
    pub fn e(prec: u32) -> Self {
        Self::from_i64(1).with_prec(prec).exp()
    }

    /// Golden ratio (1 + √5)/2.
    pub fn phi(prec: u32) -> Self {
        let s = Self::from_i64(5).with_prec(prec + 8).sqrt();
        (s + Self::from_i64(1)).half().with_prec(prec)
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    /// Re-rounds the endpoints outward to `prec` bits.
    pub fn with_prec(&self, prec: u32) -> Self {
        Interval {
            lo: rnd!(prec, &self.lo, Round::Down),
            hi: rnd!(prec, &self.hi, Round::Up),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn mid(&self) -> Float {
        let p = self.prec() + 1;
        if !self.is_finite() {
            return Float::with_val(p, Special::Nan);
        }
        let mut m = Float::with_val(p, &self.lo + &self.hi);
        m /= 2;
        m
    }

    /// Radius as an `f64` rounded up.
    pub fn rad(&self) -> f64 {
        if !self.is_finite() {
            return f64::INFINITY;
        }
        let w = rnd!(53, &self.hi - &self.lo, Round::Up);
        w.to_f64_round(Round::Up) / 2.0
    }

    pub fn mid_string(&self) -> String {
        let m = self.mid();
        if !m.is_finite() {
            return m.to_string();
        }
        let digits = ((self.prec() as f64) * std::f64::consts::LOG10_2).ceil() as usize;
        m.to_string_radix(10, Some(digits.max(2)))
    }

    pub fn contains(&self, v: &Rational) -> bool {
        !(self.lo > *v) && !(self.hi < *v)
    }

    pub fn contains_zero(&self) -> bool {
        !(self.lo > 0) && !(self.hi < 0)
    }

    pub fn sign(&self) -> Option<Ordering> {
        if self.lo > 0 {
            Some(Ordering::Greater)
        } else if self.hi < 0 {
            Some(Ordering::Less)
        } else if self.lo == 0 && self.hi == 0 {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// `floor` of every point of the interval, when they all agree.
    pub fn floor(&self) -> Option<Integer> {
        if !self.is_finite() {
            return None;
        }
        let a = self.lo.to_integer_round(Round::Down)?.0;
        let b = self.hi.to_integer_round(Round::Down)?.0;
        (a == b).then_some(a)
    }

    /// `ceil` of every point of the interval, when they all agree.
    pub fn ceil(&self) -> Option<Integer> {
        if !self.is_finite() {
            return None;
        }
        let a = self.lo.to_integer_round(Round::Up)?.0;
        let b = self.hi.to_integer_round(Round::Up)?.0;
        (a == b).then_some(a)
    }

    /// Distance from the interval to the nearest integer is below 2^-bits.
    pub fn near_integer(&self, bits: u32) -> bool {
        let m = self.mid();
        if !m.is_finite() {
            return false;
        }
        let r = Float::with_val(m.prec(), m.round_ref());
        let d = Float::with_val(m.prec(), &m - &r).abs() + self.rad();
        d < Float::with_val(64, Float::i_exp(1, -(bits as i32)))
    }

    pub fn abs(&self) -> Self {
        match self.sign() {
            Some(Ordering::Less) => -self.clone(),
            Some(_) => self.clone(),
            None => {
                let m = if -self.lo.clone() > self.hi { -self.lo.clone() } else { self.hi.clone() };
                Interval { lo: Float::with_val(self.prec(), 0), hi: m }
            }
        }
    }

    pub fn half(&self) -> Self {
        let mut r = self.clone();
        r.lo /= 2;
        r.hi /= 2;
        r
    }

    pub fn square(&self) -> Self {
        let a = self.abs();
        let p = self.prec();
        Interval {
            lo: rnd!(p, a.lo.square_ref(), Round::Down),
            hi: rnd!(p, a.hi.square_ref(), Round::Up),
        }
    }

    pub fn sqrt(&self) -> Self {
        let p = self.prec();
        let lo = if self.lo > 0 { rnd!(p, self.lo.sqrt_ref(), Round::Down) } else { Float::with_val(p, 0) };
        Interval { lo, hi: rnd!(p, self.hi.sqrt_ref(), Round::Up) }
    }

    pub fn recip(&self) -> Self {
        Self::from_i64(1) / self.clone()
    }

    pub fn pow_u(&self, k: u32) -> Self {
        if k == 0 {
            return Self::from_i64(1);
        }
        let p = self.prec();
        if self.lo >= 0 {
            Interval {
                lo: rnd!(p, rug::ops::Pow::pow(&self.lo, k), Round::Down),
                hi: rnd!(p, rug::ops::Pow::pow(&self.hi, k), Round::Up),
            }
        } else if self.hi <= 0 {
            let r = (-self.clone()).pow_u(k);
            if k % 2 == 1 {
                -r
            } else {
                r
            }
        } else {
            let mut acc = Self::from_i64(1);
            for _ in 0..k {
                acc = acc * self;
            }
            acc
        }
    }

    /// `k`-th root of a non-negative interval.
    pub fn root_u(&self, k: u32) -> Self {
        let p = self.prec();
        let mut lo = if self.lo > 0 { self.lo.clone() } else { Float::with_val(p, 0) };
        let mut hi = self.hi.clone();
        lo.set_prec_round(p, Round::Down);
        hi.set_prec_round(p, Round::Up);
        lo.root_round(k, Round::Down);
        hi.root_round(k, Round::Up);
        Interval { lo, hi }
    }

    pub fn exp(&self) -> Self {
        let p = self.prec();
        Interval {
            lo: rnd!(p, self.lo.exp_ref(), Round::Down),
            hi: rnd!(p, self.hi.exp_ref(), Round::Up),
        }
    }

    /// Natural logarithm of a positive interval.
    pub fn ln(&self) -> Self {
        let p = self.prec();
        Interval {
            lo: rnd!(p, self.lo.ln_ref(), Round::Down),
            hi: rnd!(p, self.hi.ln_ref(), Round::Up),
        }
    }

    pub fn atan(&self) -> Self {
        let p = self.prec();
        Interval {
            lo: rnd!(p, self.lo.atan_ref(), Round::Down),
            hi: rnd!(p, self.hi.atan_ref(), Round::Up),
        }
    }

    /// Tangent of an interval inside (-π/2, π/2).
    pub fn tan(&self) -> Self {
        let p = self.prec();
        Interval {
            lo: rnd!(p, self.lo.tan_ref(), Round::Down),
            hi: rnd!(p, self.hi.tan_ref(), Round::Up),
        }
    }

    /// Cosine and sine; the enclosure is widened by the interval width.
    pub fn cos_sin(&self) -> (Self, Self) {
        let p = self.prec();
        let m = self.mid();
        let w = Float::with_val(p, &self.hi - &self.lo) + Float::with_val(p, Float::i_exp(1, 4 - (p as i32)));
        let c = Float::with_val(p, m.cos_ref());
        let s = Float::with_val(p, m.sin_ref());
        let widen = |x: Float| {
            let lo = rnd!(p, &x - &w, Round::Down).max(&Float::with_val(p, -1));
            let hi = rnd!(p, &x + &w, Round::Up).min(&Float::with_val(p, 1));
            Interval { lo, hi }
        };
        (widen(c), widen(s))
    }

    pub fn max_with(&self, other: &Self) -> Self {
        Interval {
            lo: self.lo.clone().max(&other.lo),
            hi: self.hi.clone().max(&other.hi),
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.mid().to_f64()
    }
}

fn nan_to_entire(r: Interval) -> Interval {
    if r.lo.is_nan() || r.hi.is_nan() {
        Interval::entire(r.prec())
    } else {
        r
    }
}

impl Add<&Interval> for Interval {
    type Output = Interval;
    fn add(self, o: &Interval) -> Interval {
        let p = self.prec().max(o.prec());
        nan_to_entire(Interval {
            lo: rnd!(p, &self.lo + &o.lo, Round::Down),
            hi: rnd!(p, &self.hi + &o.hi, Round::Up),
        })
    }
}

impl Sub<&Interval> for Interval {
    type Output = Interval;
    fn sub(self, o: &Interval) -> Interval {
        let p = self.prec().max(o.prec());
        nan_to_entire(Interval {
            lo: rnd!(p, &self.lo - &o.hi, Round::Down),
            hi: rnd!(p, &self.hi - &o.lo, Round::Up),
        })
    }
}

impl Mul<&Interval> for Interval {
    type Output = Interval;
    fn mul(self, o: &Interval) -> Interval {
        let p = self.prec().max(o.prec());
        let (a, b) = (&self, o);
        let r = if a.lo >= 0 && b.lo >= 0 {
            Interval { lo: rnd!(p, &a.lo * &b.lo, Round::Down), hi: rnd!(p, &a.hi * &b.hi, Round::Up) }
        } else if a.hi <= 0 && b.hi <= 0 {
            Interval { lo: rnd!(p, &a.hi * &b.hi, Round::Down), hi: rnd!(p, &a.lo * &b.lo, Round::Up) }
        } else if a.lo >= 0 && b.hi <= 0 {
            Interval { lo: rnd!(p, &a.hi * &b.lo, Round::Down), hi: rnd!(p, &a.lo * &b.hi, Round::Up) }
        } else if a.hi <= 0 && b.lo >= 0 {
            Interval { lo: rnd!(p, &a.lo * &b.hi, Round::Down), hi: rnd!(p, &a.hi * &b.lo, Round::Up) }
        } else {
            let pairs = [(&a.lo, &b.lo), (&a.lo, &b.hi), (&a.hi, &b.lo), (&a.hi, &b.hi)];
            let lo = pairs.iter().map(|(x, y)| rnd!(p, *x * *y, Round::Down)).reduce(|u, v| u.min(&v)).unwrap();
            let hi = pairs.iter().map(|(x, y)| rnd!(p, *x * *y, Round::Up)).reduce(|u, v| u.max(&v)).unwrap();
            Interval { lo, hi }
        };
        nan_to_entire(r)
    }
}

impl Div<&Interval> for Interval {
    type Output = Interval;
    fn div(self, o: &Interval) -> Interval {
        let p = self.prec().max(o.prec());
        if o.contains_zero() {
            return Interval::entire(p);
        }
        let (a, b) = (&self, o);
        let pairs = [(&a.lo, &b.lo), (&a.lo, &b.hi), (&a.hi, &b.lo), (&a.hi, &b.hi)];
        let r = if b.lo > 0 && a.lo >= 0 {
            Interval { lo: rnd!(p, &a.lo / &b.hi, Round::Down), hi: rnd!(p, &a.hi / &b.lo, Round::Up) }
        } else if b.lo > 0 && a.hi <= 0 {
            Interval { lo: rnd!(p, &a.lo / &b.lo, Round::Down), hi: rnd!(p, &a.hi / &b.hi, Round::Up) }
        } else {
            let lo = pairs.iter().map(|(x, y)| rnd!(p, *x / *y, Round::Down)).reduce(|u, v| u.min(&v)).unwrap();
            let hi = pairs.iter().map(|(x, y)| rnd!(p, *x / *y, Round::Up)).reduce(|u, v| u.max(&v)).unwrap();
            Interval { lo, hi }
        };
        nan_to_entire(r)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

macro_rules! owned_rhs {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr<Interval> for Interval {
            type Output = Interval;
            fn $f(self, o: Interval) -> Interval {
                $tr::<&Interval>::$f(self, &o)
            }
        }
    )*};
}
owned_rhs!(Add add, Sub sub, Mul mul, Div div);
