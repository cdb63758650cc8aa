//! Conserved quantities along a trajectory: energy, the two action
//! invariants, the squared angular momentum and, for superintegrable mass
//! ratios, the Chevalley polynomial `J`.

use std::cmp::Ordering;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core_dynamics::{BilliardSpec, CollisionEvent, CollisionKind, KinematicState, Trajectory};
use crate::field::{Interval, Real};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvariantError {
    #[error("expected a {expected:?} event, got {got:?}")]
    WrongKind { expected: CollisionKind, got: CollisionKind },
    #[error("q must be at least 3, got {0}")]
    QTooSmall(u32),
    #[error("value for q = {0} is not representable in this field")]
    NotRepresentable(u32),
    #[error("incident velocities must satisfy V_in >= v_in > 0")]
    BadIncident,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionSource {
    FromInitial,
    FromBWEvent,
    FromBBEvent,
}

/// The action `I`, stored as `πI/m` which is what the events measure.
#[derive(Clone, Debug)]
pub struct ActionValue<R> {
    pub scaled: R,
    pub source: ActionSource,
}

impl<R: Real> ActionValue<R> {
    /// `|x0|·V0` for a run starting with the light ball at rest.
    pub fn from_initial(spec: &BilliardSpec<R>) -> Self {
        ActionValue { scaled: spec.x0.abs() * &spec.V0, source: ActionSource::FromInitial }
    }

    pub fn from_event(event: &CollisionEvent<R>) -> Self {
        match event.kind {
            CollisionKind::BallWall => ActionValue {
                scaled: event.state.X.clone() * &event.state.v,
                source: ActionSource::FromBWEvent,
            },
            CollisionKind::BallBall => ActionValue {
                scaled: event.state.X.clone() * &(event.state.V.clone() - &event.state.v),
                source: ActionSource::FromBBEvent,
            },
        }
    }

    /// `I = scaled·m/π`.
    pub fn action(&self, m: &R, prec: u32) -> Interval {
        self.scaled.to_interval(prec) * m.to_interval(prec) / Interval::pi(prec)
    }
}

fn expect_kind<R>(event: &CollisionEvent<R>, kind: CollisionKind) -> Result<(), InvariantError> {
    if event.kind == kind {
        Ok(())
    } else {
        Err(InvariantError::WrongKind { expected: kind, got: event.kind })
    }
}

/// `X·v` after a wall bounce.
pub fn action_bw<R: Real>(event: &CollisionEvent<R>) -> Result<R, InvariantError> {
    expect_kind(event, CollisionKind::BallWall)?;
    Ok(ActionValue::from_event(event).scaled)
}

/// `X·(V − v)` after a ball-ball collision.
pub fn action_bb<R: Real>(event: &CollisionEvent<R>) -> Result<R, InvariantError> {
    expect_kind(event, CollisionKind::BallBall)?;
    Ok(ActionValue::from_event(event).scaled)
}

/// `L² = mM(Xv − xV)²`.
pub fn angular_momentum_sq<R: Real>(s: &KinematicState<R>, M: &R, m: &R) -> R {
    let l = s.X.clone() * &s.v - s.x.clone() * &s.V;
    m.clone() * M * &l.square()
}

/// `tan²(π/q)` where it is rational.
pub fn exact_tan_sq(q: u32) -> Option<Rational> {
    match q {
        3 => Some(Rational::from(3)),
        4 => Some(Rational::from(1)),
        6 => Some(Rational::from((1, 3))),
        _ => None,
    }
}

fn pi_over(q: u32, prec: u32) -> Interval {
    Interval::pi(prec) / Interval::from_i64(q as i64)
}

/// `m/M = tan²(π/q)`.
pub fn superintegrable_mass_ratio(q: u32, prec: u32) -> Result<Interval, InvariantError> {
    if q < 3 {
        return Err(InvariantError::QTooSmall(q));
    }
    Ok(match exact_tan_sq(q) {
        Some(r) => Interval::from_rational(&r, prec),
        None => pi_over(q, prec + 8).tan().square().with_prec(prec),
    })
}

/// `tan²(π/q)` in the field.
pub fn tan_sq<R: Real>(q: u32, prec: u32) -> Result<R, InvariantError> {
    if let Some(r) = exact_tan_sq(q) {
        return Ok(R::from_rational(&r, prec));
    }
    R::from_interval(&superintegrable_mass_ratio(q, prec)?).ok_or(InvariantError::NotRepresentable(q))
}

/// Masses `M = 1`, `m = tan²(π/q)` and the given initial state.
pub fn superintegrable_spec<R: Real>(
    q: u32,
    X0: R,
    x0: R,
    V0: R,
    v0: R,
    prec: u32,
) -> Result<BilliardSpec<R>, InvariantError> {
    let m = tan_sq::<R>(q, prec)?;
    BilliardSpec::custom(R::from_i64(1, prec), m, X0, x0, V0, v0).map_err(|_| InvariantError::BadIncident)
}

/// `J = ½((V + i·t·v)^q + (V − i·t·v)^q)` with `t² = tan_sq`, expanded as
/// `Σ_j even C(q,j)·(−1)^(j/2)·t^j·V^(q−j)·v^j`.
pub fn chevalley_J<R: Real>(q: u32, tan_sq: &R, V: &R, v: &R) -> R {
    let prec = V.precision().max(tan_sq.precision());
    let pow = |x: &R, k: u32| {
        let mut acc = R::from_i64(1, prec);
        for _ in 0..k {
            acc = acc * x;
        }
        acc
    };
    let mut sum = R::from_i64(0, prec);
    for j in (0..=q).step_by(2) {
        let mut c = Integer::from(Integer::binomial_u(q, j));
        if (j / 2) % 2 == 1 {
            c = -c;
        }
        let term = R::from_rational(&Rational::from(c), prec) * &pow(tan_sq, j / 2) * &pow(V, q - j) * &pow(v, j);
        sum = sum + &term;
    }
    sum
}

/// `cos(π/q)` and `tan(π/q)·sin(π/q)`.
fn odd_constants<R: Real>(q: u32, prec: u32) -> Result<(R, R), InvariantError> {
    if q == 3 {
        return Ok((R::from_rational(&Rational::from((1, 2)), prec), R::from_rational(&Rational::from((3, 2)), prec)));
    }
    let (c, s) = pi_over(q, prec + 8).cos_sin();
    let ts = s.square() / &c;
    let get = |v: Interval| R::from_interval(&v.with_prec(prec)).ok_or(InvariantError::NotRepresentable(q));
    Ok((get(c)?, get(ts)?))
}

/// Velocities after the whole collision sequence for the superintegrable
/// ratio `m/M = tan²(π/q)`.
pub fn outgoing_map<R: Real>(q: u32, V_in: &R, v_in: &R) -> Result<(R, R), InvariantError> {
    if q < 3 {
        return Err(InvariantError::QTooSmall(q));
    }
    // V_in = v_in is the cannon case
    let gap = (V_in.clone() - v_in).sign();
    let ordered = matches!(gap, Some(Ordering::Greater | Ordering::Equal)) && v_in.sign() == Some(Ordering::Greater);
    if !ordered {
        return Err(InvariantError::BadIncident);
    }
    if q.is_multiple_of(2) {
        return Ok((-V_in.clone(), -v_in.clone()));
    }
    let prec = V_in.precision().max(v_in.precision()).max(64);
    let (c, ts) = odd_constants::<R>(q, prec)?;
    let V_out = -(c.clone() * V_in) - ts * v_in;
    let v_out = -(c * &(V_in.clone() - v_in));
    Ok((V_out, v_out))
}

/// One audited quantity over a trajectory.
#[derive(Clone, Debug)]
pub struct Series<R> {
    pub name: &'static str,
    /// `(event index, value)`; index 0 is the initial state.
    pub values: Vec<(u64, R)>,
    /// Whether theory says the quantity is conserved.
    pub conserved_in_theory: bool,
}

impl<R: Real> Series<R> {
    fn new(name: &'static str, conserved_in_theory: bool) -> Self {
        Series { name, values: Vec::new(), conserved_in_theory }
    }

    /// Equal values in exact mode; a common point of all enclosures in
    /// interval mode.
    pub fn is_constant(&self) -> bool {
        let Some((_, first)) = self.values.first() else {
            return true;
        };
        if R::EXACT {
            let first = first.exact();
            return self.values.iter().all(|(_, v)| v.exact() == first);
        }
        let prec = self.values.iter().map(|(_, v)| v.precision()).max().unwrap_or(64).max(64);
        let mut lo = first.to_interval(prec).lo().clone();
        let mut hi = first.to_interval(prec).hi().clone();
        for (_, v) in &self.values {
            let i = v.to_interval(prec);
            if *i.lo() > lo {
                lo = i.lo().clone();
            }
            if *i.hi() < hi {
                hi = i.hi().clone();
            }
        }
        lo <= hi
    }

    /// Largest `|v_i − v_0|`, rounded up.
    pub fn drift(&self) -> f64 {
        let Some((_, first)) = self.values.first() else {
            return 0.0;
        };
        let prec = first.precision().max(64);
        self.values
            .iter()
            .map(|(_, v)| (v.clone() - first).to_interval(prec).abs().hi().to_f64_round(rug::float::Round::Up))
            .fold(0.0, f64::max)
    }
}

/// Audit of one trajectory.
#[derive(Clone, Debug)]
pub struct InvariantReport<R> {
    pub energy: Series<R>,
    pub momentum: Series<R>,
    pub action_bw: Series<R>,
    pub action_bb: Series<R>,
    pub l_sq: Series<R>,
    pub chevalley: Option<Series<R>>,
    /// `((x_{2k−1} + x_{2k+1})/2)·v_{2k}`, which is not an invariant.
    pub averaged_position: Series<R>,
    pub initial_action: ActionValue<R>,
}

impl<R: Real> InvariantReport<R> {
    /// The series that theory says are conserved.
    pub fn conserved(&self) -> Vec<&Series<R>> {
        let mut v = vec![&self.energy, &self.action_bw, &self.action_bb, &self.l_sq];
        if let Some(j) = &self.chevalley {
            v.push(j);
        }
        v
    }

    pub fn all_conserved(&self) -> bool {
        self.conserved().iter().all(|s| s.is_constant())
    }

    /// The BW and BB actions share one value, `|x0|·V0` for a standard run.
    pub fn actions_agree(&self) -> bool {
        let mut joined = Series::new("actions", true);
        joined.values.extend(self.action_bw.values.iter().cloned());
        joined.values.extend(self.action_bb.values.iter().cloned());
        joined.values.push((0, self.initial_action.scaled.clone()));
        joined.is_constant()
    }
}

/// Computes every audited quantity over `traj`. `q` adds the Chevalley
/// polynomial with `tan²(π/q)` taken from the masses.
pub fn audit<R: Real>(traj: &Trajectory<R>, q: Option<u32>) -> Result<InvariantReport<R>, InvariantError> {
    if let Some(q) = q {
        if q < 3 {
            return Err(InvariantError::QTooSmall(q));
        }
    }
    let spec = &traj.spec;
    let ratio = spec.m.clone() / &spec.M;
    let mut energy = Series::new("energy", true);
    let mut momentum = Series::new("momentum", false);
    let mut bw = Series::new("action_bw", true);
    let mut bb = Series::new("action_bb", true);
    let mut l_sq = Series::new("l_sq", true);
    let mut chevalley = q.map(|_| Series::new("chevalley_j", true));
    let mut averaged = Series::new("averaged_position", false);

    let mut record = |s: &KinematicState<R>| {
        energy.values.push((s.n, spec.energy(s)));
        momentum.values.push((s.n, spec.momentum(s)));
        l_sq.values.push((s.n, angular_momentum_sq(s, &spec.M, &spec.m)));
        if let (Some(series), Some(q)) = (chevalley.as_mut(), q) {
            series.values.push((s.n, chevalley_J(q, &ratio, &s.V, &s.v)));
        }
    };
    record(&spec.initial_state());
    for e in &traj.events {
        record(&e.state);
        let a = ActionValue::from_event(e).scaled;
        match e.kind {
            CollisionKind::BallWall => bw.values.push((e.index, a)),
            CollisionKind::BallBall => bb.values.push((e.index, a)),
        }
    }
    for w in traj.events.windows(3) {
        let kinds = (w[0].kind, w[1].kind, w[2].kind);
        if kinds == (CollisionKind::BallBall, CollisionKind::BallWall, CollisionKind::BallBall) {
            let two = R::from_i64(2, w[1].state.v.precision());
            let avg = (w[0].state.x.clone() + &w[2].state.x) / two;
            averaged.values.push((w[1].index, avg * &w[1].state.v));
        }
    }
    Ok(InvariantReport {
        energy,
        momentum,
        action_bw: bw,
        action_bb: bb,
        l_sq,
        chevalley,
        averaged_position: averaged,
        initial_action: ActionValue::from_initial(spec),
    })
}
