//! Exact rationals kept as `±Π p_i^e_i · a/b`, where the `p_i` are small
//! primes from a process-wide registry and `a`, `b` are coprime integers
//! free of registered primes.
//!
//! Collision dynamics builds denominators like `(b^2N + 1)^k`. In plain
//! lowest-terms form every sum would need a gcd of that power against an
//! unrelated big integer. Here those powers are exponent vectors, and the
//! gcds left over are between equal or dividing operands.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{LazyLock, RwLock};

use rug::ops::Pow;
use rug::integer::IsPrime;
use rug::{Integer, Rational};

use super::{Base, Interval, Real};

/// Trial division bound for registering the primes of a constant.
const TRIAL_BOUND: u64 = 1 << 20;

struct Registry {
    primes: Vec<u64>,
    product: Integer,
    /// Every entry is prime.
    all_prime: bool,
}

static REGISTRY: LazyLock<RwLock<Registry>> =
    LazyLock::new(|| RwLock::new(Registry { primes: Vec::new(), product: Integer::from(1), all_prime: true }));

fn registry() -> std::sync::RwLockReadGuard<'static, Registry> {
    REGISTRY.read().unwrap_or_else(|e| e.into_inner())
}

/// Factors `n` into atoms with multiplicity: primes below `TRIAL_BOUND`
/// and at most one larger cofactor, which may be composite.
pub fn factor(n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut n = n;
    let mut d = 2u64;
    while n > 1 && d < TRIAL_BOUND && d * d <= n {
        let mut e = 0;
        while n.is_multiple_of(d) {
            n /= d;
            e += 1;
        }
        if e > 0 {
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn is_prime(n: u64) -> bool {
    // BPSW in GMP is deterministic below 2^64
    Integer::from(n).is_probably_prime(30) != IsPrime::No
}

/// Adds the primes of `n` to the registry when `n` fits in 64 bits.
pub fn register(n: &Integer) {
    let Some(v) = n.clone().abs().to_u64() else {
        return;
    };
    let found = factor(v);
    if found.is_empty() {
        return;
    }
    {
        let r = registry();
        if found.iter().all(|(p, _)| r.primes.contains(p)) {
            return;
        }
    }
    let mut r = REGISTRY.write().unwrap_or_else(|e| e.into_inner());
    for (p, _) in found {
        if !r.primes.contains(&p) {
            r.primes.push(p);
            r.product *= p;
            r.all_prime &= is_prime(p);
        }
    }
}

fn index_of(r: &Registry, p: u64) -> Option<usize> {
    r.primes.iter().position(|&q| q == p)
}

#[derive(Clone)]
pub struct FactoredRational {
    /// Rough numerator, carries the sign.
    num: Integer,
    /// Rough denominator, positive.
    den: Integer,
    /// Exponents indexed like the registry; missing entries are zero.
    exps: Vec<i64>,
}

fn add_exp(exps: &mut Vec<i64>, i: usize, by: i64) {
    if exps.len() <= i {
        exps.resize(i + 1, 0);
    }
    exps[i] += by;
}

/// Moves registered primes out of `x` into `exps` with weight `sign`.
fn strip(r: &Registry, x: &mut Integer, exps: &mut Vec<i64>, sign: i64) {
    if *x == 1 || *x == -1 || x.cmp0() == Ordering::Equal {
        return;
    }
    let g = Integer::from(x.gcd_ref(&r.product));
    if g == 1 {
        return;
    }
    for (i, &p) in r.primes.iter().enumerate() {
        if !g.is_divisible(&Integer::from(p)) {
            continue;
        }
        let k = if p == 2 {
            let k = x.find_one(0).unwrap_or(0);
            *x >>= k;
            k
        } else if let Ok(p) = u32::try_from(p) {
            let mut k = 0;
            while x.is_divisible_u(p) {
                x.div_exact_u_mut(p);
                k += 1;
            }
            k
        } else {
            x.remove_factor_mut(&Integer::from(p))
        };
        add_exp(exps, i, sign * k as i64);
    }
}

/// `(g, u/g, v/g)` with `g = gcd(u, v) > 0`. The dynamics mostly pairs
/// operands that are coprime because one is ±1, or where one divides the
/// other; those cases skip the gcd.
fn split(u: &Integer, v: &Integer) -> (Integer, Integer, Integer) {
    let unit = |x: &Integer| x.cmp_abs(&Integer::from(1)) == Ordering::Equal;
    if unit(u) || unit(v) {
        return (Integer::from(1), u.clone(), v.clone());
    }
    let divides = |small: &Integer, large: &Integer| {
        let (q, r) = large.div_rem_ref(small).into();
        let (q, r): (Integer, Integer) = (q, r);
        if r.cmp0() != Ordering::Equal {
            return None;
        }
        let sign = Integer::from(small.cmp0() as i32);
        Some((small.clone().abs(), sign.clone(), q * sign))
    };
    if u.significant_bits() <= v.significant_bits() {
        if let Some(r) = divides(u, v) {
            return r;
        }
    } else if let Some((g, a, b)) = divides(v, u) {
        return (g, b, a);
    }
    let g = Integer::from(u.gcd_ref(v));
    let a = Integer::from(u.div_exact_ref(&g));
    let b = Integer::from(v.div_exact_ref(&g));
    (g, a, b)
}

fn prime_power(p: u64, e: u64) -> Integer {
    Integer::from(p).pow(e as u32)
}

impl FactoredRational {
    pub fn zero() -> Self {
        FactoredRational { num: Integer::new(), den: Integer::from(1), exps: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.num.cmp0() == Ordering::Equal
    }

    /// Builds `num/den·Π p^e` when every prime common to `num` and `den`
    /// is among the listed ones.
    pub fn from_parts(mut num: Integer, mut den: Integer, smooth: &[(u64, i64)]) -> Self {
        if num.cmp0() == Ordering::Equal {
            return Self::zero();
        }
        for (p, _) in smooth {
            register(&Integer::from(*p));
        }
        if den.cmp0() == Ordering::Less {
            num = -num;
            den = -den;
        }
        let r = registry();
        let mut exps = Vec::new();
        for &(p, e) in smooth {
            match index_of(&r, p) {
                Some(i) => add_exp(&mut exps, i, e),
                None if e >= 0 => num *= prime_power(p, e as u64),
                None => den *= prime_power(p, e.unsigned_abs()),
            }
        }
        strip(&r, &mut num, &mut exps, 1);
        strip(&r, &mut den, &mut exps, -1);
        let mut out = FactoredRational { num, den, exps };
        if !r.all_prime {
            out.cancel_rough();
        }
        out
    }

    fn cancel_rough(&mut self) {
        let g = Integer::from(self.num.gcd_ref(&self.den));
        if g != 1 {
            self.num.div_exact_mut(&g);
            self.den.div_exact_mut(&g);
        }
    }

    /// Strips primes registered after this value was built.
    fn normalized(&self) -> Self {
        let r = registry();
        let mut v = self.clone();
        strip(&r, &mut v.num, &mut v.exps, 1);
        strip(&r, &mut v.den, &mut v.exps, -1);
        v.trim();
        v
    }

    fn trim(&mut self) {
        while self.exps.last() == Some(&0) {
            self.exps.pop();
        }
    }

    fn exp(&self, i: usize) -> i64 {
        self.exps.get(i).copied().unwrap_or(0)
    }

    /// `(Π p^e+, Π p^e−)`.
    fn smooth_parts(&self) -> (Integer, Integer) {
        let r = registry();
        let mut up = Integer::from(1);
        let mut down = Integer::from(1);
        for (i, &e) in self.exps.iter().enumerate() {
            if e > 0 {
                up *= prime_power(r.primes[i], e as u64);
            } else if e < 0 {
                down *= prime_power(r.primes[i], e.unsigned_abs());
            }
        }
        (up, down)
    }

    pub fn to_rational(&self) -> Rational {
        if self.is_zero() {
            return Rational::new();
        }
        let v = self.normalized();
        let (up, down) = v.smooth_parts();
        let num = v.num * up;
        let den = v.den * down;
        if registry().all_prime {
            // SAFETY: the rough parts are coprime and free of registered
            // primes, and the two smooth parts share no prime.
            unsafe { Rational::from_canonical(num, den) }
        } else {
            Rational::from((num, den))
        }
    }

    fn mul_ref(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let (_, an, bd) = split(&self.num, &o.den);
        let (_, bn, ad) = split(&o.num, &self.den);
        let num = an * bn;
        let den = ad * bd;
        let n = self.exps.len().max(o.exps.len());
        let exps = (0..n).map(|i| self.exp(i) + o.exp(i)).collect();
        let mut out = FactoredRational { num, den, exps };
        out.trim();
        out
    }

    fn recip(&self) -> Self {
        assert!(!self.is_zero(), "division by zero");
        let (mut num, mut den) = (self.den.clone(), self.num.clone());
        if den.cmp0() == Ordering::Less {
            num = -num;
            den = -den;
        }
        FactoredRational { num, den, exps: self.exps.iter().map(|e| -e).collect() }
    }

    fn add_ref(&self, o: &Self, negate: bool) -> Self {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return if negate { -o.clone() } else { o.clone() };
        }
        let r = registry();
        let n = self.exps.len().max(o.exps.len());
        let mut common = Vec::with_capacity(n);
        let mut lx = Integer::from(1);
        let mut ly = Integer::from(1);
        for i in 0..n {
            let (a, b) = (self.exp(i), o.exp(i));
            let c = a.min(b);
            common.push(c);
            if a > c {
                lx *= prime_power(r.primes[i], (a - c) as u64);
            }
            if b > c {
                ly *= prime_power(r.primes[i], (b - c) as u64);
            }
        }
        let (g, dx, dy) = split(&self.den, &o.den);
        let tx = Integer::from(&self.num * &lx) * &dy;
        let ty = Integer::from(&o.num * &ly) * &dx;
        let t = if negate { tx - ty } else { tx + ty };
        if t.cmp0() == Ordering::Equal {
            return Self::zero();
        }
        let (t, den) = if g == 1 {
            (t, dx * dy)
        } else {
            let (_, t, rest) = split(&t, &g);
            (t, dx * dy * rest)
        };
        drop(r);
        // sums of constants (M + m, M − m) join the registry
        if t.significant_bits() <= 64 {
            register(&t);
        }
        let r = registry();
        let mut out = FactoredRational { num: t, den, exps: common };
        strip(&r, &mut out.num, &mut out.exps, 1);
        out.trim();
        out
    }

    /// Exact `≥ 2^k` style magnitude estimate: `log2 |x|`.
    fn log2_abs(&self) -> f64 {
        let r = registry();
        let bits = |x: &Integer| {
            let b = x.significant_bits();
            if b <= 53 {
                x.to_f64().abs().log2()
            } else {
                let shifted = Integer::from(x >> (b - 53));
                shifted.to_f64().abs().log2() + (b - 53) as f64
            }
        };
        let mut l = bits(&self.num) - bits(&self.den);
        for (i, &e) in self.exps.iter().enumerate() {
            l += e as f64 * (r.primes[i] as f64).log2();
        }
        l
    }
}

impl PartialEq for FactoredRational {
    fn eq(&self, o: &Self) -> bool {
        let (a, b) = (self.normalized(), o.normalized());
        if a.num == b.num && a.den == b.den && a.exps == b.exps {
            return true;
        }
        if a.num.cmp0() != b.num.cmp0() {
            return false;
        }
        // unequal shapes can still be equal values when a registered entry
        // is composite
        let (ua, da) = a.smooth_parts();
        let (ub, db) = b.smooth_parts();
        a.num * ua * b.den * db == b.num * ub * a.den * da
    }
}

impl fmt::Debug for FactoredRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num.significant_bits() + self.den.significant_bits() < 256 {
            write!(f, "{}", self.to_rational())
        } else {
            write!(f, "~{:e} ({} + {} bits)", self.to_f64(), self.num.significant_bits(), self.den.significant_bits())
        }
    }
}

impl fmt::Display for FactoredRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_rational())
    }
}

impl From<&Rational> for FactoredRational {
    fn from(q: &Rational) -> Self {
        register(q.numer());
        register(q.denom());
        FactoredRational::from_parts(q.numer().clone(), q.denom().clone(), &[])
    }
}

impl Neg for FactoredRational {
    type Output = Self;
    fn neg(mut self) -> Self {
        self.num = -self.num;
        self
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr for FactoredRational {
            type Output = Self;
            fn $m(self, o: Self) -> Self {
                let f: fn(&Self, &Self) -> Self = $body;
                f(&self, &o)
            }
        }
        impl<'a> $tr<&'a FactoredRational> for FactoredRational {
            type Output = Self;
            fn $m(self, o: &'a Self) -> Self {
                let f: fn(&Self, &Self) -> Self = $body;
                f(&self, o)
            }
        }
    };
}

binop!(Add, add, |a, b| a.add_ref(b, false));
binop!(Sub, sub, |a, b| a.add_ref(b, true));
binop!(Mul, mul, |a, b| a.mul_ref(b));
binop!(Div, div, |a, b| a.mul_ref(&b.recip()));

impl Real for FactoredRational {
    const EXACT: bool = true;

    fn from_rational(q: &Rational, _prec: u32) -> Self {
        FactoredRational::from(q)
    }

    fn base_pow(base: &Base, exp: &Rational, prec: u32) -> Option<Self> {
        Rational::base_pow(base, exp, prec).map(|q| FactoredRational::from(&q))
    }

    fn sign(&self) -> Option<Ordering> {
        Some(self.num.cmp0())
    }

    fn sqrt(&self) -> Option<Self> {
        if self.num.cmp0() == Ordering::Less {
            return None;
        }
        let v = self.normalized();
        if v.exps.iter().any(|e| e % 2 != 0) || !v.num.is_perfect_square() || !v.den.is_perfect_square() {
            return None;
        }
        Some(FactoredRational {
            num: v.num.sqrt(),
            den: v.den.sqrt(),
            exps: v.exps.iter().map(|e| e / 2).collect(),
        })
    }

    fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let l = self.log2_abs();
        if l.abs() < 900.0 {
            return self.to_interval(64).to_f64();
        }
        let s = if self.num.cmp0() == Ordering::Less { -1.0 } else { 1.0 };
        s * l.exp2()
    }

    fn radius(&self) -> f64 {
        0.0
    }

    fn precision(&self) -> u32 {
        0
    }

    fn render(&self) -> String {
        self.to_rational().to_string()
    }

    fn exact(&self) -> Option<Rational> {
        Some(self.to_rational())
    }

    fn to_interval(&self, prec: u32) -> Interval {
        let r = registry();
        let w = prec + 32;
        let mut v = Interval::from_integer(&self.num, w) / Interval::from_integer(&self.den, w);
        for (i, &e) in self.exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let p = Interval::from_integer(&Integer::from(r.primes[i]), w).pow_u(e.unsigned_abs() as u32);
            v = if e > 0 { v * p } else { v / p };
        }
        v.with_prec(prec)
    }

    fn from_interval(v: &Interval) -> Option<Self> {
        v.exact().map(|q| FactoredRational::from(&q))
    }

    fn from_parts(num: Integer, den: Integer, smooth: &[(u64, i64)], _prec: u32) -> Self {
        FactoredRational::from_parts(num, den, smooth)
    }
}
