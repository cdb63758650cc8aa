#![allow(non_snake_case)]

use galperin::core_dynamics::*;
use galperin::field::{Base, Interval};
use galperin::invariants::*;
use rug::Rational;

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn standard(b: u32, n: u32) -> Trajectory<Rational> {
    let spec = BilliardSpec::<Rational>::standard(&Base::integer(b), &Rational::from(n), 0).unwrap();
    simulate(&spec, 1_000_000).unwrap()
}

#[test]
fn exact_runs_conserve() {
    for b in [2, 3, 10] {
        for n in 1..=3 {
            let r = audit(&standard(b, n), None).unwrap();
            for s in r.conserved() {
                assert!(s.is_constant(), "{} b={b} N={n}", s.name);
                assert_eq!(s.drift(), 0.0);
            }
            assert!(r.actions_agree(), "b={b} N={n}");
            assert!(!r.averaged_position.is_constant(), "b={b} N={n}");
            assert!(!r.momentum.is_constant());
        }
    }
}

#[test]
fn action_is_x0_times_v0() {
    let traj = standard(3, 2);
    let want = q(1, 1);
    for e in &traj.events {
        let a = match e.kind {
            CollisionKind::BallWall => action_bw(e).unwrap(),
            CollisionKind::BallBall => action_bb(e).unwrap(),
        };
        assert_eq!(a, want);
    }
    let bb = traj.events.iter().find(|e| e.kind == CollisionKind::BallBall).unwrap();
    assert!(action_bw(bb).is_err());
}

#[test]
fn interval_runs_enclose_constants() {
    let spec = BilliardSpec::<Interval>::standard(&Base::Phi, &q(4, 1), 256).unwrap();
    let r = audit(&simulate(&spec, 10_000).unwrap(), None).unwrap();
    assert!(r.all_conserved());
    assert!(r.energy.drift() < 1e-50);
}

#[test]
fn tan_squares() {
    assert_eq!(exact_tan_sq(4), Some(q(1, 1)));
    assert_eq!(exact_tan_sq(5), None);
    let five = superintegrable_mass_ratio(5, 128).unwrap();
    let t = (std::f64::consts::PI / 5.0).tan();
    assert!((five.to_f64() - t * t).abs() < 1e-15);
    assert_eq!(superintegrable_mass_ratio(2, 64).unwrap_err(), InvariantError::QTooSmall(2));
}

#[test]
fn chevalley_q4_is_v4_minus_6v2v2_plus_v4() {
    let (V, v) = (q(3, 1), q(2, 1));
    assert_eq!(chevalley_J(4, &q(1, 1), &V, &v), q(81 - 6 * 9 * 4 + 16, 1));
}

fn super_run(qq: u32, X0: Rational, x0: Rational, V0: Rational, v0: Rational) -> Trajectory<Rational> {
    let spec = superintegrable_spec::<Rational>(qq, X0, x0, V0, v0, 0).unwrap();
    simulate(&spec, 1000).unwrap()
}

#[test]
fn j_is_conserved() {
    for qq in [3, 4, 6] {
        let traj = super_run(qq, q(-2, 1), q(-1, 1), q(1, 1), q(0, 1));
        let r = audit(&traj, Some(qq)).unwrap();
        assert!(r.chevalley.as_ref().unwrap().is_constant(), "q={qq}");
        assert!(r.all_conserved());
    }
}

#[test]
fn j_in_interval_mode() {
    // starting from rest the last contact is a tie, so use moving balls
    let spec = superintegrable_spec::<Interval>(
        5,
        Interval::from_i64(-4),
        Interval::from_i64(-3),
        Interval::from_i64(2),
        Interval::from_i64(1),
        256,
    )
    .unwrap();
    let r = audit(&simulate(&spec, 1000).unwrap(), Some(5)).unwrap();
    assert!(r.chevalley.unwrap().is_constant());
}

#[test]
fn outgoing_velocities() {
    let (V_in, v_in) = (q(2, 1), q(1, 1));
    for qq in [3, 4, 6] {
        let bb_first = super_run(qq, q(-2, 1), q(-3, 2), V_in.clone(), v_in.clone());
        let bw_first = super_run(qq, q(-10, 1), q(-1, 1), V_in.clone(), v_in.clone());
        assert_eq!(bb_first.events[0].kind, CollisionKind::BallBall);
        assert_eq!(bw_first.events[0].kind, CollisionKind::BallWall);
        let (a, b) = (bb_first.final_state(), bw_first.final_state());
        assert_eq!((&a.V, &a.v), (&b.V, &b.v), "q={qq}");
        let want = outgoing_map(qq, &V_in, &v_in).unwrap();
        assert_eq!((a.V, a.v), want, "q={qq}");
    }
    assert_eq!(outgoing_map(4, &V_in, &v_in).unwrap(), (q(-2, 1), q(-1, 1)));
}

#[test]
fn cannon() {
    let (V, v) = (q(1, 1), q(1, 1));
    let (_, v_out) = outgoing_map(3, &V, &v).unwrap();
    assert_eq!(v_out, q(0, 1));
    let run = super_run(3, q(-2, 1), q(-1, 1), V, v);
    assert_eq!(run.final_state().v, q(0, 1));
    assert!(outgoing_map(3, &q(1, 1), &q(2, 1)).is_err());
}

#[test]
fn outgoing_map_keeps_energy_and_j() {
    let t2 = q(3, 1);
    let (V, v) = (q(5, 1), q(2, 1));
    let (Vo, vo) = outgoing_map(3, &V, &v).unwrap();
    // masses M = 1, m = 3
    let energy = |a: &Rational, b: &Rational| a.clone().square() + Rational::from(3) * b.clone().square();
    assert_eq!(energy(&V, &v), energy(&Vo, &vo));
    assert_eq!(chevalley_J(3, &t2, &V, &v), chevalley_J(3, &t2, &Vo, &vo));
}

#[test]
fn angular_momentum_sign_free() {
    let traj = standard(2, 2);
    let spec = &traj.spec;
    let first = angular_momentum_sq(&spec.initial_state(), &spec.M, &spec.m);
    assert_eq!(first, q(16, 1));
}
