#![allow(non_snake_case)]

use galperin::core_dynamics::*;
use galperin::field::{Base, FactoredRational, Real};
use galperin::geometry_analysis::*;
use rug::Rational;

fn run(b: u32, n: u32) -> Trajectory<FactoredRational> {
    let spec = BilliardSpec::<FactoredRational>::standard(&Base::integer(b), &Rational::from(n), 0).unwrap();
    simulate(&spec, 1_000_000).unwrap()
}

#[test]
fn closest_approach_decimal() {
    let traj = run(10, 1);
    let ratio = observed_min_x(&traj).unwrap() / traj.spec.x0.to_f64().abs();
    assert!((ratio - 0.0998).abs() <= 1e-4, "{ratio}");
    let ex = predicted_extremes(&traj.spec).unwrap();
    assert_eq!(ex.X_min.exact().unwrap(), Rational::from((-1, 10)));
    assert!(ratio <= 0.1 + 1e-12);
}

#[test]
fn light_ball_speed_bound() {
    let traj = run(3, 2);
    let ex = predicted_extremes(&traj.spec).unwrap();
    assert_eq!(ex.v_max.exact().unwrap(), 9);
    let seen = observed_max_v(&traj);
    assert!(seen <= 9.0 && seen > 8.9);
}

#[test]
fn hyperbolas_and_ellipse_are_exact() {
    let traj = run(2, 3);
    let (bw, bb) = hyperbola_residual(&traj).unwrap();
    assert_eq!((bw, bb), (0.0, 0.0));
    let (bw, _) = ellipse_residual(&traj);
    assert_eq!(bw, 0.0);
}

#[test]
fn parabola_tightens_with_n() {
    let r: Vec<f64> = (2..=4).map(|n| parabola_residual(&run(2, n)).unwrap()).collect();
    assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
}

#[test]
fn return_point() {
    let base = Base::integer(10);
    // 2k·arctan(1/10) ≥ π/2 first at k = 8
    assert_eq!(return_index(&base, &Rational::from(1), 1 << 12).unwrap(), 8);
    let traj = run(10, 1);
    let seen = observed_return_event(&traj).unwrap();
    assert!(seen.abs_diff(2 * 8) <= 2, "{seen}");
}

#[test]
fn report_is_consistent() {
    let traj = run(2, 3);
    let r = geometry_report(&traj).unwrap();
    // ball-ball contacts sit on the narrower hyperbola
    let narrow = (64.0f64 / 65.0).sqrt();
    assert!(r.x_min_observed >= r.x_min_predicted * narrow - 1e-12);
    assert!(r.v_max_observed <= r.v_max_predicted + 1e-12);
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("bw_hyperbola"));
}
