//! Event-driven simulation of the heavy ball, the light ball and the wall.

use std::cmp::Ordering;

use rug::Rational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{maybe_equal, Base, Interval, Real};

/// One experiment: masses and initial conditions, optionally derived from
/// a base `b` and mantissa `N` through `M = b^(2N) m`.
#[allow(non_snake_case)]
#[derive(Clone, Debug)]
pub struct BilliardSpec<R> {
    pub base: Option<Base>,
    pub mantissa: Option<Rational>,
    pub M: R,
    pub m: R,
    pub X0: R,
    pub x0: R,
    pub V0: R,
    pub v0: R,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("b^(2N) is not representable in this field")]
    NotRepresentable,
    #[error("initial positions must satisfy X0 < x0 < 0")]
    BadOrdering,
    #[error("masses must be positive")]
    BadMass,
    #[error("initial heavy velocity must be positive")]
    BadVelocity,
}

/// Precision the interval backend starts from: 64 + 4·N·log2(b) bits.
pub fn start_precision(base: &Base, mantissa: &Rational) -> u32 {
    let extra = 4.0 * mantissa.to_f64() * base.log2_approx();
    64 + extra.max(0.0).ceil() as u32
}

/// Precision ceiling used when the caller does not give one.
pub const DEFAULT_PRECISION_CAP: u32 = 1 << 20;

/// `10·ceil(π·b^N) + 10`, saturating.
pub fn default_step_limit(base: &Base, mantissa: &Rational) -> u64 {
    let v = base.pow_interval(mantissa, 64) * Interval::pi(64);
    let hi = v.hi().to_f64();
    if !hi.is_finite() || hi > 1e17 {
        return u64::MAX;
    }
    10 * hi.ceil() as u64 + 10
}

fn certainly(o: Option<Ordering>, want: Ordering) -> bool {
    o == Some(want)
}

impl<R: Real> BilliardSpec<R> {
    /// Standard run: m = 1, M = b^(2N), X0 = −2, x0 = −1, V0 = 1, v0 = 0.
    pub fn standard(base: &Base, mantissa: &Rational, prec: u32) -> Result<Self, SpecError> {
        let two_n = Rational::from(mantissa * 2u32);
        let M = R::base_pow(base, &two_n, prec).ok_or(SpecError::NotRepresentable)?;
        let c = |v: i64| R::from_i64(v, prec);
        Ok(BilliardSpec {
            base: Some(base.clone()),
            mantissa: Some(mantissa.clone()),
            M,
            m: c(1),
            X0: c(-2),
            x0: c(-1),
            V0: c(1),
            v0: c(0),
        })
    }

    /// Arbitrary masses and initial conditions.
    #[allow(non_snake_case)]
    pub fn custom(M: R, m: R, X0: R, x0: R, V0: R, v0: R) -> Result<Self, SpecError> {
        let s = BilliardSpec { base: None, mantissa: None, M, m, X0, x0, V0, v0 };
        s.validate()?;
        Ok(s)
    }

    /// Replaces the initial conditions, keeping masses.
    #[allow(non_snake_case)]
    pub fn with_initial(mut self, X0: R, x0: R, V0: R, v0: R) -> Result<Self, SpecError> {
        self.X0 = X0;
        self.x0 = x0;
        self.V0 = V0;
        self.v0 = v0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !certainly(self.M.sign(), Ordering::Greater) || !certainly(self.m.sign(), Ordering::Greater) {
            return Err(SpecError::BadMass);
        }
        let ordered = certainly((self.x0.clone() - &self.X0).sign(), Ordering::Greater)
            && certainly(self.x0.sign(), Ordering::Less);
        if !ordered {
            return Err(SpecError::BadOrdering);
        }
        if !certainly(self.V0.sign(), Ordering::Greater) {
            return Err(SpecError::BadVelocity);
        }
        Ok(())
    }

    pub fn initial_state(&self) -> KinematicState<R> {
        KinematicState {
            t: self.x0.clone() - &self.x0,
            X: self.X0.clone(),
            x: self.x0.clone(),
            V: self.V0.clone(),
            v: self.v0.clone(),
            n: 0,
        }
    }

    /// Kinetic energy ½MV² + ½mv² of a state.
    pub fn energy(&self, s: &KinematicState<R>) -> R {
        let two = R::from_i64(2, s.V.precision());
        (self.M.clone() * &s.V.square() + self.m.clone() * &s.v.square()) / two
    }

    pub fn momentum(&self, s: &KinematicState<R>) -> R {
        self.M.clone() * &s.V + self.m.clone() * &s.v
    }
}

/// Positions, velocities and time of both balls.
#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq)]
pub struct KinematicState<R> {
    pub t: R,
    pub X: R,
    pub x: R,
    pub V: R,
    pub v: R,
    pub n: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CollisionKind {
    #[serde(rename = "BB")]
    BallBall,
    #[serde(rename = "BW")]
    BallWall,
}

impl CollisionKind {
    pub fn code(self) -> &'static str {
        match self {
            CollisionKind::BallBall => "BB",
            CollisionKind::BallWall => "BW",
        }
    }

    /// Kind of the `n`-th collision of a standard run.
    pub fn of_index(n: u64) -> Self {
        if n % 2 == 1 {
            CollisionKind::BallBall
        } else {
            CollisionKind::BallWall
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollisionEvent<R> {
    pub index: u64,
    pub kind: CollisionKind,
    pub state: KinematicState<R>,
    pub dt: R,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    OutgoingState,
    DegenerateStop,
    StepLimit,
}

#[derive(Clone, Debug)]
pub struct Trajectory<R> {
    pub spec: BilliardSpec<R>,
    pub events: Vec<CollisionEvent<R>>,
    pub termination: Termination,
}

impl<R: Real> Trajectory<R> {
    pub fn final_state(&self) -> KinematicState<R> {
        self.events.last().map(|e| e.state.clone()).unwrap_or_else(|| self.spec.initial_state())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("state is not at a ball-ball contact")]
    NotInContact,
    #[error("state is not at a wall contact with the light ball approaching")]
    NotAtWall,
    #[error("square root of a mass is not in the field")]
    NoSqrt,
    #[error("rods overlap or touch the wall")]
    RodsOverlap,
}

/// Why no further collision follows.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum NoCollision {
    #[error("outgoing state")]
    Outgoing,
    #[error("light ball at rest with the heavy ball receding")]
    Degenerate,
    #[error("sign test undecided at current precision")]
    Ambiguous,
    #[error("ball-ball and ball-wall contact at the same instant")]
    Simultaneous,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("undecided sign test after {after} collisions at {prec} bits")]
    Ambiguous { after: u64, prec: u32 },
    #[error("triple contact after {after} collisions")]
    Simultaneous { after: u64 },
    #[error("precision cap of {cap} bits reached")]
    PrecisionCap { cap: u32 },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Elastic ball-ball collision.
#[allow(non_snake_case)]
pub fn collide_ball_ball<R: Real>(s: &KinematicState<R>, M: &R, m: &R) -> Result<KinematicState<R>, DynamicsError> {
    if !maybe_equal(&s.X, &s.x) {
        return Err(DynamicsError::NotInContact);
    }
    let c = BbCoefficients::new(M, m);
    Ok(c.apply(s))
}

/// `V' = aV + cv`, `v' = dV − av` with the mass ratios folded in.
struct BbCoefficients<R> {
    a: R,
    c: R,
    d: R,
}

impl<R: Real> BbCoefficients<R> {
    #[allow(non_snake_case)]
    fn new(M: &R, m: &R) -> Self {
        let total = M.clone() + m;
        BbCoefficients {
            a: (M.clone() - m) / &total,
            c: (m.clone() + m) / &total,
            d: (M.clone() + M) / &total,
        }
    }

    fn apply(&self, s: &KinematicState<R>) -> KinematicState<R> {
        let V = self.a.clone() * &s.V + self.c.clone() * &s.v;
        let v = self.d.clone() * &s.V - self.a.clone() * &s.v;
        KinematicState { t: s.t.clone(), X: s.X.clone(), x: s.x.clone(), V, v, n: s.n + 1 }
    }
}

/// Light ball bounces off the wall.
pub fn collide_ball_wall<R: Real>(s: &KinematicState<R>) -> Result<KinematicState<R>, DynamicsError> {
    if !maybe_equal(&s.x, &R::from_i64(0, s.x.precision())) || s.v.sign() != Some(Ordering::Greater) {
        return Err(DynamicsError::NotAtWall);
    }
    let mut r = s.clone();
    r.v = -r.v;
    r.n += 1;
    Ok(r)
}

/// Which collision happens next and after how long.
#[allow(non_snake_case)]
pub fn next_collision<R: Real>(s: &KinematicState<R>) -> Result<(CollisionKind, R), NoCollision> {
    next_with_gaps(&s.x, &s.X, &s.V, &s.v, None)
}

/// `x_eff` is the light ball's wall-side end, `gap` the free distance
/// between the balls (defaults to `x − X`).
#[allow(non_snake_case)]
fn next_with_gaps<R: Real>(
    x_eff: &R,
    X: &R,
    V: &R,
    v: &R,
    gap: Option<R>,
) -> Result<(CollisionKind, R), NoCollision> {
    let sv = v.sign().ok_or(NoCollision::Ambiguous)?;
    let rel = V.clone() - v;
    let srel = rel.sign().ok_or(NoCollision::Ambiguous)?;
    if sv != Ordering::Greater && srel != Ordering::Greater {
        if sv == Ordering::Equal && V.sign().ok_or(NoCollision::Ambiguous)? != Ordering::Greater {
            return Err(NoCollision::Degenerate);
        }
        return Err(NoCollision::Outgoing);
    }
    let gap = gap.unwrap_or_else(|| x_eff.clone() - X);
    let bb = || (CollisionKind::BallBall, gap.clone() / &rel);
    let bw = || (CollisionKind::BallWall, -(x_eff.clone() / v));
    match (srel == Ordering::Greater, sv == Ordering::Greater) {
        (true, false) => Ok(bb()),
        (false, true) => Ok(bw()),
        _ => {
            // dt_BB < dt_BW  <=>  gap·v + x·(V − v) < 0
            let key = gap.clone() * v + x_eff.clone() * &rel;
            match key.sign().ok_or(NoCollision::Ambiguous)? {
                Ordering::Less => Ok(bb()),
                Ordering::Greater => Ok(bw()),
                Ordering::Equal => Err(NoCollision::Simultaneous),
            }
        }
    }
}

/// Result of a streaming run.
#[derive(Clone, Debug)]
pub struct RunSummary<R> {
    pub count: u64,
    pub termination: Termination,
    pub final_state: KinematicState<R>,
}

/// Runs to termination, calling `visit` on each event without storing it.
pub fn simulate_with<R: Real>(
    spec: &BilliardSpec<R>,
    step_limit: u64,
    visit: impl FnMut(&CollisionEvent<R>),
) -> Result<RunSummary<R>, SimError> {
    run(spec, None, step_limit, visit)
}

pub fn simulate<R: Real>(spec: &BilliardSpec<R>, step_limit: u64) -> Result<Trajectory<R>, SimError> {
    let mut events = Vec::new();
    let summary = simulate_with(spec, step_limit, |e| events.push(e.clone()))?;
    Ok(Trajectory { spec: spec.clone(), events, termination: summary.termination })
}

/// Simulation of rods: the heavy rod has length `R` and the light rod
/// length `r`; positions are the rods' left ends.
#[allow(non_snake_case)]
pub fn simulate_rods<R: Real>(
    spec: &BilliardSpec<R>,
    R_len: &R,
    r_len: &R,
    step_limit: u64,
) -> Result<Trajectory<R>, SimError> {
    let free = spec.x0.clone() + r_len;
    let gap = spec.x0.clone() - &spec.X0 - R_len;
    if free.sign() != Some(Ordering::Less) || gap.sign() != Some(Ordering::Greater) {
        return Err(DynamicsError::RodsOverlap.into());
    }
    let mut events = Vec::new();
    let summary = run(spec, Some((R_len, r_len)), step_limit, |e| events.push(e.clone()))?;
    Ok(Trajectory { spec: spec.clone(), events, termination: summary.termination })
}

#[allow(non_snake_case)]
fn run<R: Real>(
    spec: &BilliardSpec<R>,
    rods: Option<(&R, &R)>,
    step_limit: u64,
    mut visit: impl FnMut(&CollisionEvent<R>),
) -> Result<RunSummary<R>, SimError> {
    let coeffs = BbCoefficients::new(&spec.M, &spec.m);
    let prec = spec.M.precision();
    let zero = R::from_i64(0, prec);
    let mut s = spec.initial_state();
    let termination = loop {
        let next = match rods {
            None => next_collision(&s),
            Some((Rl, rl)) => {
                let x_eff = s.x.clone() + rl;
                let gap = s.x.clone() - &s.X - Rl;
                next_with_gaps(&x_eff, &s.X, &s.V, &s.v, Some(gap))
            }
        };
        let (kind, dt) = match next {
            Ok(k) => k,
            Err(NoCollision::Outgoing) => break Termination::OutgoingState,
            Err(NoCollision::Degenerate) => break Termination::DegenerateStop,
            Err(NoCollision::Ambiguous) => return Err(SimError::Ambiguous { after: s.n, prec }),
            Err(NoCollision::Simultaneous) => return Err(SimError::Simultaneous { after: s.n }),
        };
        if s.n >= step_limit {
            break Termination::StepLimit;
        }
        let t = s.t.clone() + &dt;
        let X = match (rods, kind) {
            // grouped so exact arithmetic cancels early
            (None, CollisionKind::BallBall) if R::EXACT => s.x.clone() + &(s.v.clone() * &dt),
            (None, CollisionKind::BallWall) if R::EXACT => {
                let lever = s.X.clone() * &(s.v.clone() - &s.V) + &(s.V.clone() * &(s.X.clone() - &s.x));
                lever / &s.v
            }
            _ => s.X.clone() + &(s.V.clone() * &dt),
        };
        let after = match kind {
            CollisionKind::BallBall => {
                let x = match rods {
                    None => X.clone(),
                    Some((Rl, _)) => X.clone() + Rl,
                };
                coeffs.apply(&KinematicState { t, X, x, V: s.V, v: s.v, n: s.n })
            }
            CollisionKind::BallWall => {
                let x = match rods {
                    None => zero.clone(),
                    Some((_, rl)) => -rl.clone(),
                };
                KinematicState { t, X, x, V: s.V, v: -s.v, n: s.n + 1 }
            }
        };
        visit(&CollisionEvent { index: after.n, kind, state: after.clone(), dt });
        s = after;
    };
    Ok(RunSummary { count: s.n, termination, final_state: s })
}

/// Retries `attempt` with doubled precision while it reports an undecided
/// sign test.
pub fn with_escalation<T>(
    start: u32,
    cap: u32,
    mut attempt: impl FnMut(u32) -> Result<T, SimError>,
) -> Result<T, SimError> {
    let mut prec = start.clamp(16, cap.max(16));
    loop {
        match attempt(prec) {
            Err(SimError::Ambiguous { .. }) if prec < cap => prec = (prec * 2).min(cap),
            Err(SimError::Ambiguous { .. }) => return Err(SimError::PrecisionCap { cap }),
            other => return other,
        }
    }
}

/// Interval-mode standard run with automatic precision escalation.
pub fn simulate_interval(
    base: &Base,
    mantissa: &Rational,
    step_limit: u64,
    cap: u32,
) -> Result<Trajectory<Interval>, SimError> {
    with_escalation(start_precision(base, mantissa), cap, |prec| {
        let spec = BilliardSpec::<Interval>::standard(base, mantissa, prec)?;
        simulate(&spec, step_limit)
    })
}

/// Counts collisions of a standard interval-mode run without storing them.
pub fn count_interval(base: &Base, mantissa: &Rational, step_limit: u64, cap: u32) -> Result<RunSummary<Interval>, SimError> {
    with_escalation(start_precision(base, mantissa), cap, |prec| {
        let spec = BilliardSpec::<Interval>::standard(base, mantissa, prec)?;
        simulate_with(&spec, step_limit, |_| {})
    })
}

/// Billiard variables `(Y, y, W, w) = (√M X, √m x, √M V, √m v)`.
#[allow(non_snake_case)]
pub fn to_billiard_coords<R: Real>(s: &KinematicState<R>, M: &R, m: &R) -> Result<(R, R, R, R), DynamicsError> {
    let sM = M.sqrt().ok_or(DynamicsError::NoSqrt)?;
    let sm = m.sqrt().ok_or(DynamicsError::NoSqrt)?;
    Ok((sM.clone() * &s.X, sm.clone() * &s.x, sM * &s.V, sm * &s.v))
}

/// Polar coordinates of an event on the unfolded straight line.
///
/// The angle is measured from the wall mirror; event `n` sits on the
/// mirror at `n·arctan(√(m/M))`.
#[derive(Clone, Debug)]
pub struct UnfoldedPoint<R> {
    pub radius: R,
    pub angle: Interval,
}

#[allow(non_snake_case)]
pub fn unfold_point<R: Real>(event: &CollisionEvent<R>, M: &R, m: &R) -> Result<UnfoldedPoint<R>, DynamicsError> {
    let (Y, y, _, _) = to_billiard_coords(&event.state, M, m)?;
    let radius = match event.kind {
        CollisionKind::BallBall => (Y.square() + &y.square()).sqrt().ok_or(DynamicsError::NoSqrt)?,
        CollisionKind::BallWall => Y.abs(),
    };
    let prec = M.precision().max(128);
    let ratio = (m.to_interval(prec) / M.to_interval(prec)).sqrt();
    let angle = ratio.atan() * Interval::from_i64(event.index as i64);
    Ok(UnfoldedPoint { radius, angle })
}

/// Maps rod positions to the equivalent point-ball positions.
#[allow(non_snake_case)]
pub fn hard_rod_map<R: Real>(X: &R, x: &R, R_len: &R, r_len: &R) -> Result<(R, R), DynamicsError> {
    let light_clear = x.clone() + r_len;
    let heavy_clear = x.clone() - X - R_len - r_len;
    if light_clear.sign() != Some(Ordering::Less) || heavy_clear.sign() != Some(Ordering::Greater) {
        return Err(DynamicsError::RodsOverlap);
    }
    Ok((X.clone() + R_len + r_len, light_clear))
}
