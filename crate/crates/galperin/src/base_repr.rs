//! Positional expansions in integer and non-integer bases, the digits of π
//! read off collision counts, and the systematic error `ε`.

use std::cmp::Ordering;
use std::fmt;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closed_form::{collision_count, CollisionCount, CountError};
use crate::field::{rational_string, Base, Interval};
use crate::par::prelude::*;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReprError {
    #[error("digit at power {power} undecided at the precision cap of {cap} bits")]
    FloorAmbiguity { power: i64, cap: u32 },
    #[error("value must be finite and non-negative")]
    Negative,
    #[error("golden dual forms need a value of at least φ²")]
    BelowPhiSquared,
    #[error("digit shifting needs an integer mantissa")]
    NonIntegerMantissa,
    #[error(transparent)]
    Count(#[from] CountError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exactness {
    Finite,
    Truncated,
}

/// Digits most significant first; the first digit multiplies
/// `base^radix_offset`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitExpansion {
    pub base: Base,
    pub digits: Vec<u32>,
    pub radix_offset: i64,
    pub exactness: Exactness,
}

fn symbol(d: u32) -> char {
    char::from_digit(d, 36).map(|c| c.to_ascii_uppercase()).unwrap_or('?')
}

impl DigitExpansion {
    /// Power of the last emitted digit.
    pub fn lowest_power(&self) -> i64 {
        self.radix_offset - self.digits.len() as i64 + 1
    }

    /// Same digits with the radix point moved `places` to the left.
    pub fn shifted(&self, places: i64) -> Self {
        DigitExpansion { radix_offset: self.radix_offset - places, ..self.clone() }
    }

    /// Digit of `base^power`, zero outside the emitted range.
    pub fn digit_at(&self, power: i64) -> u32 {
        let i = self.radix_offset - power;
        if i < 0 {
            return 0;
        }
        self.digits.get(i as usize).copied().unwrap_or(0)
    }

    /// `Σ d_i·b^i` as a certified enclosure.
    pub fn reconstruct(&self, prec: u32) -> Interval {
        let b = self.base.interval(prec);
        let mut acc = Interval::from_i64(0).with_prec(prec);
        for &d in &self.digits {
            acc = acc * &b + Interval::from_i64(d as i64);
        }
        let low = self.lowest_power();
        if low >= 0 {
            acc * b.pow_u(low as u32)
        } else {
            acc / b.pow_u(low.unsigned_abs() as u32)
        }
    }
}

impl fmt::Display for DigitExpansion {
    /// Integer bases print `314` and `3.14`; other bases mark the radix
    /// point even without a fraction (`101.`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let top = self.radix_offset.max(0);
        let low = self.lowest_power().min(0);
        let mut int = String::new();
        for p in (0..=top).rev() {
            int.push(symbol(self.digit_at(p)));
        }
        let mut frac = String::new();
        for p in (low..0).rev() {
            frac.push(symbol(self.digit_at(p)));
        }
        if !frac.is_empty() {
            write!(f, "{int}.{frac}")
        } else if self.base.as_integer().is_some() {
            write!(f, "{int}")
        } else {
            write!(f, "{int}.")
        }
    }
}

/// Exact greedy expansion in an integer base.
pub fn expand_integer_base(x: &Rational, b: u32, frac_digits: u32) -> Result<DigitExpansion, ReprError> {
    if b < 2 {
        return Err(ReprError::Negative);
    }
    expand_rational_base(x, &Base::integer(b), frac_digits)
}

/// Exact greedy expansion in a rational base `b > 1`.
fn expand_rational_base(x: &Rational, base: &Base, frac_digits: u32) -> Result<DigitExpansion, ReprError> {
    let bq = base.as_rational().cloned().unwrap_or_default();
    if x.cmp0() == Ordering::Less || bq <= 1 {
        return Err(ReprError::Negative);
    }
    if x.cmp0() == Ordering::Equal {
        return Ok(DigitExpansion { base: base.clone(), digits: vec![0], radix_offset: 0, exactness: Exactness::Finite });
    }
    // leading power: largest n with b^n ≤ x
    let mut n: i64 = 0;
    let mut p = Rational::from(1);
    while p <= *x {
        p *= &bq;
        n += 1;
    }
    n -= 1;
    p /= &bq;
    while p > *x {
        p /= &bq;
        n -= 1;
    }
    let low = -(frac_digits as i64);
    // a value below the last requested place still gets a zero there
    while n < low {
        p *= &bq;
        n += 1;
    }
    let mut r = x.clone();
    let mut digits = Vec::new();
    let mut power = n;
    while power >= low {
        let d = Rational::from(&r / &p).floor();
        let d = d.numer().to_u32().unwrap_or(0);
        r -= Rational::from(d) * &p;
        digits.push(d);
        p /= &bq;
        power -= 1;
    }
    Ok(finish(base.clone(), digits, n, r.cmp0() == Ordering::Equal))
}

/// `a + b·φ` with rational `a`, `b`, so that ties against powers of φ are
/// decided exactly.
#[derive(Clone, Debug)]
struct GoldenNumber {
    a: Rational,
    b: Rational,
}

impl GoldenNumber {
    fn rational(x: &Rational) -> Self {
        GoldenNumber { a: x.clone(), b: Rational::new() }
    }

    fn one() -> Self {
        Self::rational(&Rational::from(1))
    }

    // φ² = φ + 1
    fn times_phi(&self) -> Self {
        GoldenNumber { a: self.b.clone(), b: Rational::from(&self.a + &self.b) }
    }

    // 1/φ = φ − 1
    fn over_phi(&self) -> Self {
        GoldenNumber { a: Rational::from(&self.b - &self.a), b: self.a.clone() }
    }

    fn power(k: i64) -> Self {
        let mut p = Self::one();
        for _ in 0..k.unsigned_abs() {
            p = if k > 0 { p.times_phi() } else { p.over_phi() };
        }
        p
    }

    fn sub(&self, o: &Self) -> Self {
        GoldenNumber { a: Rational::from(&self.a - &o.a), b: Rational::from(&self.b - &o.b) }
    }

    /// Sign of `u + v√5` with `u = 2a + b`, `v = b`.
    fn sign(&self) -> Ordering {
        let u = Rational::from(&self.a * 2u32) + &self.b;
        let v = &self.b;
        let (su, sv) = (u.cmp0(), v.cmp0());
        if su == sv || sv == Ordering::Equal {
            return su;
        }
        if su == Ordering::Equal {
            return sv;
        }
        let uu = Rational::from(u.square_ref());
        let vv = Rational::from(v.square_ref()) * 5u32;
        match uu.cmp(&vv) {
            Ordering::Greater => su,
            Ordering::Less => sv,
            Ordering::Equal => Ordering::Equal,
        }
    }

    fn ge(&self, o: &Self) -> bool {
        self.sub(o).sign() != Ordering::Less
    }
}

/// Largest `n` with `φ^n ≤ x`, and `φ^n`, for `x > 0`.
fn golden_leading_power(x: &GoldenNumber) -> (i64, GoldenNumber) {
    let mut n = 0i64;
    let mut p = GoldenNumber::one();
    while x.ge(&p.times_phi()) {
        p = p.times_phi();
        n += 1;
    }
    while !x.ge(&p) {
        p = p.over_phi();
        n -= 1;
    }
    (n, p)
}

/// Greedy 0/1 digits of `r` from `φ^lead` down to `φ^low`.
fn golden_greedy(r: &mut GoldenNumber, lead: i64, low: i64) -> Vec<u32> {
    let mut digits = Vec::new();
    if lead < low {
        return digits;
    }
    let mut p = GoldenNumber::power(lead);
    for _ in low..=lead {
        let d = r.ge(&p);
        if d {
            *r = r.sub(&p);
        }
        digits.push(d as u32);
        p = p.over_phi();
    }
    digits
}

fn expand_golden(x: &Rational, frac_digits: u32) -> Result<DigitExpansion, ReprError> {
    if x.cmp0() == Ordering::Less {
        return Err(ReprError::Negative);
    }
    if x.cmp0() == Ordering::Equal {
        return Ok(DigitExpansion { base: Base::Phi, digits: vec![0], radix_offset: 0, exactness: Exactness::Finite });
    }
    let mut r = GoldenNumber::rational(x);
    let low = -(frac_digits as i64);
    let lead = golden_leading_power(&r).0.max(low);
    let digits = golden_greedy(&mut r, lead, low);
    Ok(finish(Base::Phi, digits, lead, r.sign() == Ordering::Equal))
}

/// Wraps raw digits, padding the integer part when the leading power is
/// below zero.
fn finish(base: Base, mut digits: Vec<u32>, lead: i64, exact: bool) -> DigitExpansion {
    let exactness = if exact { Exactness::Finite } else { Exactness::Truncated };
    if digits.is_empty() {
        return DigitExpansion { base, digits: vec![0], radix_offset: 0, exactness };
    }
    let mut offset = lead;
    while offset < 0 {
        digits.insert(0, 0);
        offset += 1;
    }
    DigitExpansion { base, digits, radix_offset: offset, exactness }
}

/// Greedy digits of `x` from `lead` down to `low`, each capped at `cap`.
/// `Err(Some(power))` reports an undecided floor.
fn greedy_digits(
    r: &mut Interval,
    b: &Interval,
    lead: i64,
    low: i64,
    digit_cap: u32,
) -> Result<Vec<u32>, i64> {
    let mut digits = Vec::new();
    if lead < low {
        return Ok(digits);
    }
    let mut p = if lead >= 0 { b.pow_u(lead as u32) } else { b.pow_u(lead.unsigned_abs() as u32).recip() };
    let mut power = lead;
    while power >= low {
        let q = r.clone() / &p;
        let d = match q.floor() {
            Some(d) => d.to_u32().unwrap_or(u32::MAX).min(digit_cap),
            // a digit already at its cap needs no decision
            None if *q.lo() >= digit_cap => digit_cap,
            None => return Err(power),
        };
        *r = r.clone() - Interval::from_i64(d as i64) * &p;
        digits.push(d);
        p = p / b;
        power -= 1;
    }
    Ok(digits)
}

/// `int[log_b x]` certified.
fn leading_power(x: &Interval, b: &Interval) -> Result<i64, ()> {
    let v = x.ln() / b.ln();
    v.floor().and_then(|k| k.to_i64()).ok_or(())
}

fn escalate<T>(start: u32, cap: u32, mut f: impl FnMut(u32) -> Result<T, i64>) -> Result<T, ReprError> {
    let mut prec = start.min(cap);
    loop {
        match f(prec) {
            Ok(v) => return Ok(v),
            Err(power) if prec >= cap => return Err(ReprError::FloorAmbiguity { power, cap }),
            Err(_) => prec = (prec * 2).min(cap),
        }
    }
}

fn start_prec(base: &Base, frac_digits: u32, magnitude_bits: u32) -> u32 {
    64 + magnitude_bits + (frac_digits as f64 * base.log2_approx()).ceil() as u32
}

/// Greedy (beta) expansion of `x` in any base `b > 1`, with `x` given at
/// any requested precision.
pub fn expand_with(
    x: impl Fn(u32) -> Interval,
    base: &Base,
    frac_digits: u32,
    cap: u32,
) -> Result<DigitExpansion, ReprError> {
    let probe = x(64);
    if probe.sign() == Some(Ordering::Less) {
        return Err(ReprError::Negative);
    }
    if probe.sign() == Some(Ordering::Equal) {
        return Ok(DigitExpansion { base: base.clone(), digits: vec![0], radix_offset: 0, exactness: Exactness::Finite });
    }
    let magnitude = probe.hi().get_exp().unwrap_or(0).unsigned_abs();
    let low = -(frac_digits as i64);
    let digit_cap = base.digit_bound() - 1;
    escalate(start_prec(base, frac_digits, magnitude), cap, |prec| {
        let xv = x(prec);
        let b = base.interval(prec);
        let lead = leading_power(&xv, &b).map_err(|_| low.max(0))?.max(low);
        let mut r = xv;
        let digits = greedy_digits(&mut r, &b, lead, low, digit_cap)?;
        let exact = r.sign() == Some(Ordering::Equal);
        Ok(finish(base.clone(), digits, lead, exact))
    })
}

/// Greedy expansion of an exact value in any base. Rational bases and φ are
/// expanded exactly; e and π through certified intervals.
pub fn expand_noninteger_base(x: &Rational, base: &Base, frac_digits: u32, cap: u32) -> Result<DigitExpansion, ReprError> {
    match base {
        Base::Exact(_) => expand_rational_base(x, base, frac_digits),
        Base::Phi => expand_golden(x, frac_digits),
        _ => expand_with(|p| Interval::from_rational(x, p), base, frac_digits, cap),
    }
}

/// A row of the digit tables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiDigits {
    pub base: Base,
    pub mantissa: u32,
    pub count: CollisionCount,
    /// `Π` in base `b`, integer part.
    pub count_digits: DigitExpansion,
    /// `Π/b^N` in base `b`.
    pub shifted: DigitExpansion,
    /// Golden-ratio base only: π itself in Type I and Type II form, cut
    /// after `N` fractional digits.
    pub dual: Option<(DigitExpansion, DigitExpansion)>,
}

impl PiDigits {
    /// `(1/b^N)` in base `b`, the resolution of the last digit.
    pub fn unit(&self) -> DigitExpansion {
        DigitExpansion {
            base: self.base.clone(),
            digits: vec![1],
            radix_offset: -(self.mantissa as i64),
            exactness: Exactness::Finite,
        }
    }

    /// `ε/b^N`.
    pub fn systematic_error(&self, prec: u32) -> Interval {
        let e = Interval::from_integer(&self.count.epsilon, prec);
        e / self.base.pow_interval(&Rational::from(self.mantissa), prec)
    }

    /// `ε/b^N` exactly when `b` is rational.
    pub fn systematic_error_exact(&self) -> Option<Rational> {
        let b = self.base.as_rational()?;
        let bn = b.clone().pow(self.mantissa);
        Some(Rational::from(&self.count.epsilon) / bn)
    }
}

fn count_expansion(count: &Integer, base: &Base, cap: u32) -> Result<DigitExpansion, ReprError> {
    expand_noninteger_base(&Rational::from(count), base, 0, cap)
}

/// Counts collisions for `(b, N)` and writes `Π` and `Π/b^N` in base `b`.
/// `N = 0` keeps the formula value and flags it as degenerate.
pub fn pi_digits(base: &Base, mantissa: u32, cap: u32) -> Result<PiDigits, ReprError> {
    let count = collision_count(base, &Rational::from(mantissa), cap)?;
    let count_digits = count_expansion(&count.exact, base, cap)?;
    let shifted = count_digits.shifted(mantissa as i64);
    let dual = if matches!(base, Base::Phi) {
        Some(golden_dual_forms_of(Interval::pi, mantissa, cap)?)
    } else {
        None
    };
    Ok(PiDigits { base: base.clone(), mantissa, count, count_digits, shifted, dual })
}

/// `ε = Π_exact − Π_approx`; a degenerate exact count enters with its
/// formula value.
pub fn systematic_error(base: &Base, mantissa: &Rational, cap: u32) -> Result<Integer, CountError> {
    Ok(collision_count(base, mantissa, cap)?.epsilon)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCell {
    #[serde(with = "rational_string")]
    pub b: Rational,
    #[serde(with = "rational_string")]
    pub N: Rational,
    /// `None` when a floor could not be certified.
    pub epsilon: Option<i64>,
}

/// Evenly spaced grid over `b` and `N`, endpoints included.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(with = "rational_string")]
    pub b_min: Rational,
    #[serde(with = "rational_string")]
    pub b_max: Rational,
    pub b_steps: u32,
    #[serde(with = "rational_string")]
    pub n_min: Rational,
    #[serde(with = "rational_string")]
    pub n_max: Rational,
    pub n_steps: u32,
}

fn axis(lo: &Rational, hi: &Rational, steps: u32) -> Vec<Rational> {
    if steps <= 1 {
        return vec![lo.clone()];
    }
    let step = Rational::from(hi - lo) / (steps - 1);
    (0..steps).map(|i| lo + Rational::from(&step * i)).collect()
}

impl GridSpec {
    pub fn cells(&self) -> Vec<(Rational, Rational)> {
        let bs = axis(&self.b_min, &self.b_max, self.b_steps);
        let ns = axis(&self.n_min, &self.n_max, self.n_steps);
        ns.iter().flat_map(|n| bs.iter().map(move |b| (b.clone(), n.clone()))).collect()
    }
}

/// `ε` for one cell.
pub fn error_cell(b: &Rational, n: &Rational, cap: u32) -> ErrorCell {
    let epsilon = systematic_error(&Base::Exact(b.clone()), n, cap).ok().and_then(|e| e.to_i64());
    ErrorCell { b: b.clone(), N: n.clone(), epsilon }
}

/// `ε` over a grid, cells evaluated concurrently and returned in grid
/// order (N-major).
pub fn error_map(grid: &GridSpec, cap: u32) -> Vec<ErrorCell> {
    let cells = grid.cells();
    cells.par_iter().map(|(b, n)| error_cell(b, n, cap)).collect()
}

/// Single-threaded `error_map`.
pub fn error_map_sequential(grid: &GridSpec, cap: u32) -> Vec<ErrorCell> {
    grid.cells().iter().map(|(b, n)| error_cell(b, n, cap)).collect()
}

/// The two golden-ratio forms of `x ≥ φ²`: Type I starts with the block
/// `100`, Type II with `11` one place lower (`φ^n = φ^(n−1) + φ^(n−2)`).
/// Both continue with the greedy digits of `x − φ^n` from `φ^(n−3)`. That
/// remainder can be as large as `φ^(n−1)`, so the truncation error is below
/// `φ^(low+1)` rather than the greedy `φ^low`.
pub fn golden_dual_forms(x: &Rational, frac_digits: u32) -> Result<(DigitExpansion, DigitExpansion), ReprError> {
    if x.cmp0() != Ordering::Greater {
        return Err(ReprError::Negative);
    }
    let v = GoldenNumber::rational(x);
    let (lead, top) = golden_leading_power(&v);
    if lead < 2 {
        return Err(ReprError::BelowPhiSquared);
    }
    let low = -(frac_digits as i64);
    let mut r = v.sub(&top);
    let tail = golden_greedy(&mut r, lead - 3, low);
    Ok(dual_pair(&tail, lead, low, r.sign() == Ordering::Equal))
}

fn dual_pair(tail: &[u32], lead: i64, low: i64, exact: bool) -> (DigitExpansion, DigitExpansion) {
    let build = |head: &[u32], top: i64| {
        let mut digits: Vec<u32> = head.to_vec();
        digits.extend(tail.iter().copied());
        // the fixed block may reach below the requested precision
        digits.truncate((top - low + 1).max(1) as usize);
        finish(Base::Phi, digits, top, exact)
    };
    (build(&[1, 0, 0], lead), build(&[1, 1], lead - 1))
}

pub fn golden_dual_forms_of(
    x: impl Fn(u32) -> Interval,
    frac_digits: u32,
    cap: u32,
) -> Result<(DigitExpansion, DigitExpansion), ReprError> {
    let probe = x(64);
    if probe.sign() != Some(Ordering::Greater) {
        return Err(ReprError::Negative);
    }
    let magnitude = probe.hi().get_exp().unwrap_or(0).unsigned_abs();
    let low = -(frac_digits as i64);
    let (lead, tail, exact) = escalate(start_prec(&Base::Phi, frac_digits, magnitude), cap, |prec| {
        let xv = x(prec);
        let b = Interval::phi(prec);
        let lead = leading_power(&xv, &b).map_err(|_| 0i64)?;
        if lead < 2 {
            return Ok(None);
        }
        let top = if lead >= 0 { b.pow_u(lead as u32) } else { b.pow_u(lead.unsigned_abs() as u32).recip() };
        let mut r = xv - top;
        let tail = greedy_digits(&mut r, &b, lead - 3, low, 1)?;
        Ok(Some((lead, tail, r.sign() == Some(Ordering::Equal))))
    })?
    .ok_or(ReprError::BelowPhiSquared)?;
    Ok(dual_pair(&tail, lead, low, exact))
}
