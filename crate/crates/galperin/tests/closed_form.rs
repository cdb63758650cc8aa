use galperin::closed_form::*;
use galperin::core_dynamics::*;
use galperin::field::{Base, Interval, Real};
use rug::{Integer, Rational};

const CAP: u32 = 1 << 16;

fn count(b: &str, n: u32) -> Result<Integer, CountError> {
    count_collisions_exact(&b.parse().unwrap(), &Rational::from(n), CAP)
}

#[test]
fn decimal_counts() {
    let want = ["31", "314", "3141", "31415", "314159", "3141592", "31415926", "314159265", "3141592653", "31415926535"];
    for (i, w) in want.iter().enumerate() {
        assert_eq!(count("10", i as u32 + 1).unwrap().to_string(), *w);
    }
}

#[test]
fn zero_mantissa_is_degenerate() {
    assert_eq!(count("10", 0), Err(CountError::SubmultipleDegeneracy { formula: Integer::from(4) }));
}

#[test]
fn simulation_matches_states() {
    for (b, n) in [(2u32, 1u32), (2, 3), (3, 2), (10, 1), (5, 2)] {
        let base = Base::integer(b);
        let spec = BilliardSpec::<Rational>::standard(&base, &Rational::from(n), 0).unwrap();
        let traj = simulate(&spec, 1_000_000).unwrap();
        let cf = ClosedForm::new(&spec, CAP).unwrap();
        assert_eq!(traj.events.len() as u64, cf.count(), "b={b} N={n}");
        for (e, s) in traj.events.iter().zip(cf.states()) {
            assert_eq!(e.state, s, "b={b} N={n} event {}", e.index);
            assert_eq!(e.state, cf.state_at(e.index).unwrap());
        }
    }
}

#[test]
fn interval_states_contain_exact() {
    let base = Base::integer(3);
    let n = Rational::from(2);
    let exact = ClosedForm::new(&BilliardSpec::<Rational>::standard(&base, &n, 0).unwrap(), CAP).unwrap();
    let approx = ClosedForm::new(&BilliardSpec::<Interval>::standard(&base, &n, 128).unwrap(), CAP).unwrap();
    assert_eq!(exact.count(), 28);
    for (a, b) in exact.states().zip(approx.states()) {
        for (q, i) in [(&a.t, &b.t), (&a.X, &b.X), (&a.x, &b.x), (&a.V, &b.V), (&a.v, &b.v)] {
            assert!(i.contains(q), "event {}", a.n);
        }
        assert!(b.X.radius() < 1e-25);
    }
}

#[test]
fn flights_telescope() {
    let base = Base::integer(2);
    let spec = BilliardSpec::<Rational>::standard(&base, &Rational::from(3), 0).unwrap();
    let cf = ClosedForm::new(&spec, CAP).unwrap();
    for n in 1..=cf.count() {
        assert_eq!(cf.time_by_sum(n).unwrap(), cf.time_of(n).unwrap());
    }
}
