//! Geometric laws of the heavy ball's motion checked against trajectories:
//! extremes, the return point, the parabola near it, and the hyperbolae
//! and ellipse traced by the collision points.
//!
//! Times are measured from `t* = −X0/V0`, the instant the unfolded straight
//! line passes closest to the wedge apex. `X_min = |x0|·b^-N` is the
//! distance of that closest approach.

use std::cmp::Ordering;

use rug::float::Round;
use rug::Rational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closed_form::{pivot_angle, CountError};
use crate::core_dynamics::{BilliardSpec, CollisionKind, Trajectory};
use crate::field::{Base, Interval, Real};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("b^N = sqrt(M/m) is not in the field")]
    NoSqrt,
    #[error("trajectory has no collisions")]
    Empty,
    #[error(transparent)]
    Count(#[from] CountError),
}

/// Upper bounds from energy conservation and the closest approach.
#[derive(Clone, Debug)]
pub struct Extremes<R> {
    pub v_max: R,
    pub P_max: R,
    pub p_max: R,
    /// Signed, `x0/b^N`.
    pub X_min: R,
}

fn b_pow<R: Real>(spec: &BilliardSpec<R>) -> Result<R, GeometryError> {
    (spec.M.clone() / &spec.m).sqrt().ok_or(GeometryError::NoSqrt)
}

pub fn predicted_extremes<R: Real>(spec: &BilliardSpec<R>) -> Result<Extremes<R>, GeometryError> {
    let b = b_pow(spec)?;
    let P_max = spec.M.clone() * &spec.V0;
    Ok(Extremes {
        v_max: b.clone() * &spec.V0,
        p_max: P_max.clone() / &b,
        P_max,
        X_min: spec.x0.clone() / &b,
    })
}

/// Smallest `k` with `2k·arctan(b^-N) ≥ π/2`.
pub fn return_index(base: &Base, mantissa: &Rational, cap: u32) -> Result<u64, GeometryError> {
    if mantissa.cmp0() == Ordering::Equal {
        return Ok(1);
    }
    let mut prec = 64 + (2.0 * mantissa.to_f64() * base.log2_approx()).max(0.0).ceil() as u32;
    loop {
        let w = prec + 16;
        let ratio = Interval::pi(w) / (pivot_angle(base, mantissa, w).varphi * Interval::from_i64(4));
        if let Some(k) = ratio.ceil() {
            return Ok(k.to_u64().unwrap_or(u64::MAX));
        }
        if prec >= cap {
            if ratio.near_integer(prec / 2) {
                // k·φ lands on π/2 exactly
                let k = ratio.mid().to_integer_round(Round::Nearest).map(|(k, _)| k).unwrap_or_default();
                return Ok(k.to_u64().unwrap_or(u64::MAX));
            }
            return Err(CountError::PrecisionExhausted { cap }.into());
        }
        prec = (prec * 2).min(cap);
    }
}

/// Index of the first event whose heavy-ball velocity is not positive.
pub fn observed_return_event<R: Real>(traj: &Trajectory<R>) -> Option<u64> {
    traj.events.iter().find(|e| e.state.V.sign() != Some(Ordering::Greater)).map(|e| e.index)
}

/// Upper bound of `|v|` as an `f64`.
fn upper_abs<R: Real>(v: &R, prec: u32) -> f64 {
    v.to_interval(prec).abs().hi().to_f64_round(Round::Up)
}

fn prec_of<R: Real>(spec: &BilliardSpec<R>) -> u32 {
    spec.M.precision().max(128)
}

/// `min |X|` over all events.
pub fn observed_min_x<R: Real>(traj: &Trajectory<R>) -> Result<f64, GeometryError> {
    let prec = prec_of(&traj.spec);
    traj.events
        .iter()
        .map(|e| e.state.X.to_interval(prec).abs().lo().to_f64_round(Round::Down))
        .reduce(f64::min)
        .ok_or(GeometryError::Empty)
}

/// `max |v|` over the initial state and all events.
pub fn observed_max_v<R: Real>(traj: &Trajectory<R>) -> f64 {
    let prec = prec_of(&traj.spec);
    traj.events.iter().map(|e| upper_abs(&e.state.v, prec)).fold(upper_abs(&traj.spec.v0, prec), f64::max)
}

/// Time origin `t* = −X0/V0` and `|X_min|`.
fn origin<R: Real>(spec: &BilliardSpec<R>) -> Result<(R, R), GeometryError> {
    let b = b_pow(spec)?;
    Ok((-(spec.X0.clone() / &spec.V0), spec.x0.abs() / &b))
}

/// Largest deviation from 1 of the hyperbola relations, separately for BW
/// and BB events:
/// `(X/X_min)² − (V0·t′/X_min)² = 1` at the wall and the same with the
/// `X` semi-axis scaled by `√(M/(M+m))` at ball-ball contact.
pub fn hyperbola_residual<R: Real>(traj: &Trajectory<R>) -> Result<(f64, f64), GeometryError> {
    let spec = &traj.spec;
    let (t_star, x_min) = origin(spec)?;
    let x_min_sq = x_min.square();
    let bb_axis_sq = x_min_sq.clone() * &spec.M / &(spec.M.clone() + &spec.m);
    let one = R::from_i64(1, spec.M.precision());
    let prec = prec_of(spec);
    let (mut bw, mut bb) = (0.0f64, 0.0f64);
    for e in &traj.events {
        let s = &e.state;
        let ct = (s.t.clone() - &t_star) * &spec.V0;
        let time_term = ct.square() / &x_min_sq;
        let r = match e.kind {
            CollisionKind::BallWall => s.X.square() / &x_min_sq - &time_term - &one,
            CollisionKind::BallBall => s.X.square() / &bb_axis_sq - &time_term - &one,
        };
        let r = upper_abs(&r, prec);
        match e.kind {
            CollisionKind::BallWall => bw = bw.max(r),
            CollisionKind::BallBall => bb = bb.max(r),
        }
    }
    Ok((bw, bb))
}

/// Largest deviation of `b^-2N·(x0/X)² + (V/V0)² = 1` over BW events and
/// over BB events.
pub fn ellipse_residual<R: Real>(traj: &Trajectory<R>) -> (f64, f64) {
    let spec = &traj.spec;
    let ratio = spec.m.clone() / &spec.M;
    let one = R::from_i64(1, spec.M.precision());
    let prec = prec_of(spec);
    let (mut bw, mut bb) = (0.0f64, 0.0f64);
    for e in &traj.events {
        let s = &e.state;
        let r = ratio.clone() * &(spec.x0.clone() / &s.X).square() + &(s.V.clone() / &spec.V0).square() - &one;
        let r = upper_abs(&r, prec);
        match e.kind {
            CollisionKind::BallWall => bw = bw.max(r),
            CollisionKind::BallBall => bb = bb.max(r),
        }
    }
    (bw, bb)
}

/// Largest relative deviation of `|X|/X_min` from `1 + ½(V0·t′/X_min)²`
/// over events within `b^N/4` collisions of the return event.
pub fn parabola_residual<R: Real>(traj: &Trajectory<R>) -> Result<f64, GeometryError> {
    let spec = &traj.spec;
    let b = b_pow(spec)?.to_f64();
    let ret = observed_return_event(traj).ok_or(GeometryError::Empty)? as f64;
    let t_star = -(spec.X0.to_f64() / spec.V0.to_f64());
    let x_min = spec.x0.to_f64().abs() / b;
    let v0 = spec.V0.to_f64();
    let window = b / 4.0;
    let mut worst = 0.0f64;
    for e in &traj.events {
        if (e.index as f64 - ret).abs() > window {
            continue;
        }
        let u = v0 * (e.state.t.to_f64() - t_star) / x_min;
        let model = 1.0 + 0.5 * u * u;
        let seen = e.state.X.to_f64().abs() / x_min;
        worst = worst.max((seen - model).abs() / model);
    }
    Ok(worst)
}

/// Predicted and observed extremes with the curve residuals of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub x_min_observed: f64,
    pub x_min_predicted: f64,
    pub v_max_observed: f64,
    pub v_max_predicted: f64,
    pub return_event: Option<u64>,
    pub bw_hyperbola: f64,
    pub bb_hyperbola: f64,
    pub bw_ellipse: f64,
    pub bb_ellipse: f64,
    pub parabola: f64,
}

pub fn geometry_report<R: Real>(traj: &Trajectory<R>) -> Result<GeometryReport, GeometryError> {
    let ex = predicted_extremes(&traj.spec)?;
    let (bw_hyperbola, bb_hyperbola) = hyperbola_residual(traj)?;
    let (bw_ellipse, bb_ellipse) = ellipse_residual(traj);
    Ok(GeometryReport {
        x_min_observed: observed_min_x(traj)?,
        x_min_predicted: ex.X_min.to_f64().abs(),
        v_max_observed: observed_max_v(traj),
        v_max_predicted: ex.v_max.to_f64(),
        return_event: observed_return_event(traj),
        bw_hyperbola,
        bb_hyperbola,
        bw_ellipse,
        bb_ellipse,
        parabola: parabola_residual(traj)?,
    })
}
