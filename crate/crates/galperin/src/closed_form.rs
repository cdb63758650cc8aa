//! Closed-form collision counts and states.
//!
//! Event `n` of a standard run (v0 = 0) lies on the `n`-th mirror of the
//! unfolded wedge, so every quantity is a trigonometric function of
//! `n·varphi` with `tan(varphi) = b^-N`. Powers of `b^N + i` give those
//! values as exact rationals when `b^N` is rational.

use std::cmp::Ordering;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core_dynamics::{BilliardSpec, CollisionKind, KinematicState};
use crate::field::{factor, Base, Interval, Real};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CountError {
    #[error("pi/arctan(b^-N) is an integer ({formula}); the formula over-counts by one")]
    SubmultipleDegeneracy { formula: Integer },
    #[error("floor still undecided at the precision cap of {cap} bits")]
    PrecisionExhausted { cap: u32 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClosedFormError {
    #[error("collision index {n} outside 1..={count}")]
    OutOfRange { n: u64, count: u64 },
    #[error("closed form needs v0 = 0")]
    MovingLightBall,
    #[error("b^N = sqrt(M/m) is not in the field")]
    NoSqrt,
    #[error(transparent)]
    Count(#[from] CountError),
}

/// `varphi = arctan(b^-N)` and `phi = 2·varphi`.
#[derive(Clone, Debug)]
pub struct PivotAngle {
    pub varphi: Interval,
    pub phi: Interval,
}

pub fn pivot_angle(base: &Base, mantissa: &Rational, prec: u32) -> PivotAngle {
    let varphi = base.pow_interval(mantissa, prec + 8).recip().atan().with_prec(prec);
    let phi = varphi.clone() + &varphi;
    PivotAngle { varphi, phi }
}

/// Precision at which count evaluation starts for `b^N`.
fn count_start_precision(base: &Base, mantissa: &Rational) -> u32 {
    let bits = mantissa.to_f64() * base.log2_approx();
    64 + (2.0 * bits.max(0.0)).ceil() as u32
}

/// Evaluates `f(prec)` with doubling precision until its floor is certain.
fn certified_floor(
    start: u32,
    cap: u32,
    f: impl Fn(u32) -> Interval,
    degeneracy_possible: bool,
) -> Result<Integer, CountError> {
    let mut prec = start.min(cap);
    loop {
        let v = f(prec);
        if let Some(k) = v.floor() {
            return Ok(k);
        }
        if prec >= cap {
            if degeneracy_possible && v.near_integer(prec / 2) {
                let formula = v.mid().to_integer().unwrap_or_default();
                return Err(CountError::SubmultipleDegeneracy { formula });
            }
            return Err(CountError::PrecisionExhausted { cap });
        }
        prec = (prec * 2).min(cap);
    }
}

/// `int[π / arctan(b^-N)]`, certified.
pub fn count_collisions_exact(base: &Base, mantissa: &Rational, cap: u32) -> Result<Integer, CountError> {
    if mantissa.cmp0() == Ordering::Equal {
        return Err(CountError::SubmultipleDegeneracy { formula: Integer::from(4) });
    }
    certified_floor(
        count_start_precision(base, mantissa),
        cap,
        |p| {
            let w = p + 16;
            let theta = base.pow_interval(mantissa, w).recip().atan();
            (Interval::pi(w) / theta).with_prec(p)
        },
        true,
    )
}

/// `int[π·b^N]`, certified.
pub fn count_collisions_approx(base: &Base, mantissa: &Rational, cap: u32) -> Result<Integer, CountError> {
    certified_floor(
        count_start_precision(base, mantissa),
        cap,
        |p| {
            let w = p + 16;
            (Interval::pi(w) * base.pow_interval(mantissa, w)).with_prec(p)
        },
        false,
    )
}

/// Counts for a mass ratio given directly by `B = sqrt(M/m)`.
pub fn count_for_ratio(b_pow: &Interval, cap: u32) -> Result<Integer, CountError> {
    let start = b_pow.prec().max(64);
    certified_floor(
        start,
        cap.max(start),
        |p| {
            let theta = b_pow.with_prec(p + 16).recip().atan();
            (Interval::pi(p + 16) / theta).with_prec(p)
        },
        true,
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionCount {
    #[serde(with = "integer_string")]
    pub exact: Integer,
    #[serde(with = "integer_string")]
    pub approx: Integer,
    #[serde(with = "integer_string")]
    pub epsilon: Integer,
    /// The exact value is the formula value of a degenerate case.
    pub degenerate: bool,
}

pub(crate) mod integer_string {
    use rug::Integer;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Integer, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Integer, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Both counts and their difference. A degenerate exact count is kept at
/// its formula value and flagged.
pub fn collision_count(base: &Base, mantissa: &Rational, cap: u32) -> Result<CollisionCount, CountError> {
    let (exact, degenerate) = match count_collisions_exact(base, mantissa, cap) {
        Ok(k) => (k, false),
        Err(CountError::SubmultipleDegeneracy { formula }) => (formula, true),
        Err(e) => return Err(e),
    };
    let approx = count_collisions_approx(base, mantissa, cap)?;
    let epsilon = Integer::from(&exact - &approx);
    Ok(CollisionCount { exact, approx, epsilon, degenerate })
}

/// `φ_n = (−1)^(n+1)·2·varphi·int[(n+1)/2]`.
pub fn phase_angle(n: u64, base: &Base, mantissa: &Rational, prec: u32) -> Interval {
    let k = n.div_ceil(2);
    let phi = pivot_angle(base, mantissa, prec + 8).phi;
    let sign = if n % 2 == 1 { 1 } else { -1 };
    (phi * Interval::from_integer(&Integer::from(k), prec + 8) * Interval::from_i64(sign)).with_prec(prec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    EndsBallBall,
    EndsBallWall,
}

/// Kind of the terminal collision: an even count ends at the wall.
pub fn terminal_parity(base: &Base, mantissa: &Rational, cap: u32) -> Result<Parity, CountError> {
    let n = count_collisions_exact(base, mantissa, cap)?;
    Ok(if n.is_even() { Parity::EndsBallWall } else { Parity::EndsBallBall })
}

/// Exact helpers for `b^N = p/q`: Gaussian integer `z = p + iq`.
///
/// Values are handed to the field as `num/den · Π a^e` over the atoms of
/// `p² + q²`, so `(p² + q²)^k` is never formed. `gcd(Re z^n, Im z^n)` is a
/// power of two, which keeps the other shared primes among those of 2, `p`,
/// `q` and the initial data.
#[derive(Clone, Debug)]
struct Gauss {
    p: Integer,
    q: Integer,
    /// Atoms of `p² + q²` with multiplicity.
    norm: Vec<(u64, i64)>,
    /// Atoms of 2, `p`, `q` and the initial data, each with exponent zero.
    shared: Vec<(u64, i64)>,
    x0: Rational,
    big_x0: Rational,
    v0: Rational,
}

fn gmul(a: &(Integer, Integer), b: &(Integer, Integer)) -> (Integer, Integer) {
    let re = Integer::from(&a.0 * &b.0) - Integer::from(&a.1 * &b.1);
    let im = Integer::from(&a.0 * &b.1) + Integer::from(&a.1 * &b.0);
    (re, im)
}

fn gpow(z: &(Integer, Integer), mut e: u64) -> (Integer, Integer) {
    let mut acc = (Integer::from(1), Integer::from(0));
    let mut base = z.clone();
    while e > 0 {
        if e & 1 == 1 {
            acc = gmul(&acc, &base);
        }
        e >>= 1;
        if e > 0 {
            base = gmul(&base, &base);
        }
    }
    acc
}

impl Gauss {
    /// `None` when some input does not fit in 64 bits.
    fn new(b: &Rational, x0: &Rational, big_x0: &Rational, v0: &Rational) -> Option<Self> {
        let p = b.numer().clone();
        let q = b.denom().clone();
        let norm_int = Integer::from(p.square_ref()) + Integer::from(q.square_ref());
        let norm = factor(norm_int.to_u64()?).into_iter().map(|(a, e)| (a, e as i64)).collect();
        let mut shared: Vec<(u64, i64)> = Vec::new();
        let mut add = |n: &Integer| -> Option<()> {
            for (a, _) in factor(n.clone().abs().to_u64()?) {
                if !shared.iter().any(|&(s, _)| s == a) {
                    shared.push((a, 0));
                }
            }
            Some(())
        };
        add(&Integer::from(2))?;
        add(&p)?;
        add(&q)?;
        for r in [x0, big_x0, v0] {
            add(r.numer())?;
            add(r.denom())?;
        }
        Some(Gauss { p, q, norm, shared, x0: x0.clone(), big_x0: big_x0.clone(), v0: v0.clone() })
    }

    fn z(&self) -> (Integer, Integer) {
        (self.p.clone(), self.q.clone())
    }

    /// `num/den · (p² + q²)^k`.
    fn make<R: Real>(&self, num: Integer, den: Integer, k: i64, prec: u32) -> R {
        let mut parts = self.shared.clone();
        parts.extend(self.norm.iter().map(|&(a, e)| (a, e * k)));
        R::from_parts(num, den, &parts, prec)
    }

    /// State after collision `n`, from `g_n = z^n` and `g_2k = z^(2k)` with
    /// `k = int[(n+1)/2]`.
    fn state<R: Real>(
        &self,
        n: u64,
        g_n: &(Integer, Integer),
        g_2k: &(Integer, Integer),
        prec: u32,
    ) -> KinematicState<R> {
        let k = n.div_ceil(2) as i64;
        let (re, im) = g_2k;
        // sin φ_n carries the sign (−1)^(n+1)
        let im_signed = if n % 2 == 1 { im.clone() } else { -im.clone() };
        let (v0n, v0d) = (self.v0.numer(), self.v0.denom());
        let (x0n, x0d) = (self.x0.numer(), self.x0.denom());
        let big_v = self.make(Integer::from(v0n * re), v0d.clone(), -k, prec);
        let small_v =
            self.make(Integer::from(v0n * &self.p) * &im_signed, Integer::from(v0d * &self.q), -k, prec);
        let (big_x, x) = if n.is_multiple_of(2) {
            // X = −x0 / (B sin φ) = −x0·q·N^k / (p·Im)
            let big_x =
                self.make(-Integer::from(x0n * &self.q), Integer::from(x0d * &self.p) * &im_signed, k, prec);
            (big_x, R::from_i64(0, prec))
        } else {
            // X = x = x0 / (B sin φ − cos φ) = x0·q·N^k / (p·Im − q·Re)
            let den = Integer::from(&self.p * &im_signed) - Integer::from(&self.q * re);
            let big_x: R = self.make(Integer::from(x0n * &self.q), den * x0d, k, prec);
            (big_x.clone(), big_x)
        };
        KinematicState { t: self.time(g_n, prec), X: big_x, x, V: big_v, v: small_v, n }
    }

    /// `t_n = (x0·cot(n·varphi)/B − X0)/V0` with `cot = Re(z^n)/Im(z^n)`.
    fn time<R: Real>(&self, g_n: &(Integer, Integer), prec: u32) -> R {
        let (re, im) = g_n;
        let (a, b) = (self.x0.numer(), self.x0.denom());
        let (c, d) = (self.big_x0.numer(), self.big_x0.denom());
        let (e, f) = (self.v0.numer(), self.v0.denom());
        // (a·q·Re/(b·p·Im) − c/d)·f/e
        let num = (Integer::from(a * &self.q) * re * d - Integer::from(c * &self.p) * im * b) * f;
        let den = Integer::from(b * &self.p) * im * d * e;
        self.make(num, den, 0, prec)
    }
}

/// Closed-form states of a standard run (any masses, v0 = 0).
#[derive(Clone, Debug)]
pub struct ClosedForm<R> {
    spec: BilliardSpec<R>,
    b_pow: R,
    count: u64,
    degenerate: bool,
    gauss: Option<Gauss>,
}

impl<R: Real> ClosedForm<R> {
    pub fn new(spec: &BilliardSpec<R>, cap: u32) -> Result<Self, ClosedFormError> {
        if spec.v0.sign() != Some(Ordering::Equal) {
            return Err(ClosedFormError::MovingLightBall);
        }
        let b_pow = (spec.M.clone() / &spec.m).sqrt().ok_or(ClosedFormError::NoSqrt)?;
        let formula = match (&spec.base, &spec.mantissa) {
            (Some(b), Some(n)) => count_collisions_exact(b, n, cap),
            _ => {
                let prec = b_pow.precision().max(128);
                if b_pow.exact().is_some_and(|v| v == 1) {
                    Err(CountError::SubmultipleDegeneracy { formula: Integer::from(4) })
                } else {
                    count_for_ratio(&b_pow.to_interval(prec), cap)
                }
            }
        };
        let (count, degenerate) = match formula {
            Ok(k) => (k, false),
            Err(CountError::SubmultipleDegeneracy { formula }) => (formula - 1u32, true),
            Err(e) => return Err(e.into()),
        };
        let count = count.to_u64().unwrap_or(u64::MAX);
        let gauss = match (b_pow.exact(), spec.x0.exact(), spec.X0.exact(), spec.V0.exact()) {
            (Some(b), Some(x0), Some(bx0), Some(v0)) if R::EXACT => Gauss::new(&b, &x0, &bx0, &v0),
            _ => None,
        };
        Ok(ClosedForm { spec: spec.clone(), b_pow, count, degenerate, gauss })
    }

    /// Physical number of collisions Π.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// The count formula over-counts this spec by one.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn b_pow(&self) -> &R {
        &self.b_pow
    }

    fn check(&self, n: u64) -> Result<(), ClosedFormError> {
        if n == 0 || n > self.count {
            Err(ClosedFormError::OutOfRange { n, count: self.count })
        } else {
            Ok(())
        }
    }

    fn prec(&self) -> u32 {
        self.spec.M.precision()
    }

    fn one(&self) -> R {
        R::from_i64(1, self.prec())
    }

    /// `(b^N + i)^e` in the field.
    fn power(&self, e: u64) -> (R, R) {
        let zero = R::from_i64(0, self.prec());
        let mul = |a: &(R, R), b: &(R, R)| {
            (a.0.clone() * &b.0 - a.1.clone() * &b.1, a.0.clone() * &b.1 + a.1.clone() * &b.0)
        };
        let mut acc = (self.one(), zero);
        let mut base = (self.b_pow.clone(), self.one());
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = mul(&base, &base);
            }
        }
        acc
    }

    /// `cos(2k·varphi)` and `sin(2k·varphi)`.
    fn cos_sin_double(&self, k: u64) -> (R, R) {
        let (re, im) = self.power(2 * k);
        let norm = self.b_pow.square() + &self.one();
        let mut nk = self.one();
        let mut base = norm;
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                nk = nk * &base;
            }
            e >>= 1;
            if e > 0 {
                base = base.square();
            }
        }
        (re / &nk, im / &nk)
    }

    pub fn state_at(&self, n: u64) -> Result<KinematicState<R>, ClosedFormError> {
        self.check(n)?;
        if let Some(g) = &self.gauss {
            let z = g.z();
            let g_n = gpow(&z, n);
            let g_2k = if n.is_multiple_of(2) { g_n.clone() } else { gmul(&g_n, &z) };
            return Ok(g.state(n, &g_n, &g_2k, self.prec()));
        }
        let k = n.div_ceil(2);
        let (c, s) = self.cos_sin_double(k);
        let sin_phi = if n % 2 == 1 { s } else { -s };
        Ok(self.assemble(n, c, sin_phi))
    }

    #[allow(non_snake_case)]
    fn assemble(&self, n: u64, cos_phi: R, sin_phi: R) -> KinematicState<R> {
        let sp = &self.spec;
        let V = sp.V0.clone() * &cos_phi;
        let v = sp.V0.clone() * &self.b_pow * &sin_phi;
        let bs = self.b_pow.clone() * &sin_phi;
        let (X, x) = if n.is_multiple_of(2) {
            (-(sp.x0.clone() / &bs), R::from_i64(0, self.prec()))
        } else {
            let X = sp.x0.clone() / &(bs - &cos_phi);
            (X.clone(), X)
        };
        KinematicState { t: self.time_generic(n), X, x, V, v, n }
    }

    fn time_generic(&self, n: u64) -> R {
        let (re, im) = self.power(n);
        let cot = re / &im;
        let sp = &self.spec;
        (sp.x0.clone() * &cot / &self.b_pow - &sp.X0) / &sp.V0
    }

    /// Time of collision `n` (telescoped form of the sum of free flights).
    pub fn time_of(&self, n: u64) -> Result<R, ClosedFormError> {
        self.check(n)?;
        if let Some(g) = &self.gauss {
            return Ok(g.time(&gpow(&g.z(), n), self.prec()));
        }
        Ok(self.time_generic(n))
    }

    /// Free-flight time after collision `l` (`l = 0` is the initial flight).
    pub fn tau(&self, l: u64) -> Result<R, ClosedFormError> {
        let sp = &self.spec;
        if l == 0 {
            return Ok((sp.x0.clone() - &sp.X0) / &sp.V0);
        }
        if l >= self.count {
            return Err(ClosedFormError::OutOfRange { n: l, count: self.count });
        }
        let s = self.state_at(l)?;
        Ok(match CollisionKind::of_index(l) {
            CollisionKind::BallBall => -(s.x / &s.v),
            CollisionKind::BallWall => -(s.X / &(s.V - &s.v)),
        })
    }

    /// `t_n` as the explicit sum of the preceding free flights.
    pub fn time_by_sum(&self, n: u64) -> Result<R, ClosedFormError> {
        self.check(n)?;
        let mut t = self.tau(0)?;
        for l in 1..n {
            t = t + &self.tau(l)?;
        }
        Ok(t)
    }

    /// All states `1..=Π` in order, each in O(1) field operations.
    pub fn states(&self) -> States<'_, R> {
        let inner = match &self.gauss {
            Some(g) => {
                let z = g.z();
                StatesInner::Exact { cur: z.clone(), next: gmul(&z, &z), z }
            }
            None => {
                let z = (self.b_pow.clone(), self.one());
                StatesInner::Field { cur: z.clone(), next: self.power(2), z, norm_k: self.one(), k: 0 }
            }
        };
        States { cf: self, n: 0, inner }
    }
}

enum StatesInner<R> {
    Exact { z: (Integer, Integer), cur: (Integer, Integer), next: (Integer, Integer) },
    Field { z: (R, R), cur: (R, R), next: (R, R), norm_k: R, k: u64 },
}

pub struct States<'a, R> {
    cf: &'a ClosedForm<R>,
    n: u64,
    inner: StatesInner<R>,
}

impl<R: Real> Iterator for States<'_, R> {
    type Item = KinematicState<R>;

    fn next(&mut self) -> Option<KinematicState<R>> {
        if self.n >= self.cf.count {
            return None;
        }
        self.n += 1;
        let n = self.n;
        let out = match &mut self.inner {
            StatesInner::Exact { z, cur, next } => {
                let g = self.cf.gauss.as_ref()?;
                let p = self.cf.prec();
                let s = if n.is_multiple_of(2) { g.state(n, cur, cur, p) } else { g.state(n, cur, next, p) };
                let after = gmul(next, z);
                *cur = std::mem::replace(next, after);
                s
            }
            StatesInner::Field { z, cur, next, norm_k, k } => {
                let cf = self.cf;
                let (re, im) = if n.is_multiple_of(2) { cur.clone() } else { next.clone() };
                if n.div_ceil(2) != *k {
                    *norm_k = norm_k.clone() * &(cf.b_pow.square() + &cf.one());
                    *k += 1;
                }
                let c = re / &*norm_k;
                let s = im / &*norm_k;
                let sin_phi = if n % 2 == 1 { s } else { -s };
                let mut st = cf.assemble_without_time(n, c, sin_phi);
                let cot = cur.0.clone() / &cur.1;
                let sp = &cf.spec;
                st.t = (sp.x0.clone() * &cot / &cf.b_pow - &sp.X0) / &sp.V0;
                let mul = |a: &(R, R), b: &(R, R)| {
                    (a.0.clone() * &b.0 - a.1.clone() * &b.1, a.0.clone() * &b.1 + a.1.clone() * &b.0)
                };
                let after = mul(next, z);
                *cur = std::mem::replace(next, after);
                st
            }
        };
        Some(out)
    }
}

impl<R: Real> ClosedForm<R> {
    #[allow(non_snake_case)]
    fn assemble_without_time(&self, n: u64, cos_phi: R, sin_phi: R) -> KinematicState<R> {
        let sp = &self.spec;
        let V = sp.V0.clone() * &cos_phi;
        let v = sp.V0.clone() * &self.b_pow * &sin_phi;
        let bs = self.b_pow.clone() * &sin_phi;
        let zero = R::from_i64(0, self.prec());
        let (X, x) = if n.is_multiple_of(2) {
            (-(sp.x0.clone() / &bs), zero.clone())
        } else {
            let X = sp.x0.clone() / &(bs - &cos_phi);
            (X.clone(), X)
        };
        KinematicState { t: zero, X, x, V, v, n }
    }
}

/// Free functions over a spec, for one-off queries.
pub fn state_at<R: Real>(n: u64, spec: &BilliardSpec<R>, cap: u32) -> Result<KinematicState<R>, ClosedFormError> {
    ClosedForm::new(spec, cap)?.state_at(n)
}

pub fn time_of<R: Real>(n: u64, spec: &BilliardSpec<R>, cap: u32) -> Result<R, ClosedFormError> {
    ClosedForm::new(spec, cap)?.time_of(n)
}

/// Spec parameters as `f64` for the approximate laws.
fn approx_params<R: Real>(spec: &BilliardSpec<R>) -> (f64, f64) {
    let b_pow = (spec.M.to_f64() / spec.m.to_f64()).sqrt();
    let t0 = (spec.x0.to_f64() / spec.V0.to_f64()).abs();
    (b_pow, t0)
}

/// `t0/τ_n ≈ b^(2N)·sin²(n/b^N)`.
pub fn approx_inverse_tau<R: Real>(n: u64, spec: &BilliardSpec<R>) -> f64 {
    let (b_pow, _) = approx_params(spec);
    let s = (n as f64 / b_pow).sin();
    b_pow * b_pow * s * s
}

/// `t(n′) = t0·(1 + b^-N·tan(n′/b^N))`; the return point sits at `t0`.
pub fn approx_time_after_return<R: Real>(nprime: f64, spec: &BilliardSpec<R>) -> f64 {
    let (b_pow, t0) = approx_params(spec);
    t0 * (1.0 + (nprime / b_pow).tan() / b_pow)
}
