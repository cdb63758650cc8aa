use std::process::{Command, Output};

use galperin::cli_io::{execute, read_trace_json, Number, RunConfig};
use galperin::core_dynamics::{simulate, BilliardSpec, CollisionKind};
use galperin::field::Base;
use rug::Rational;

fn galperin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_galperin")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn golden_dual_row() {
    let o = galperin(&["digits", "--base", "phi", "--mantissa", "3", "--dual"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[7..], ["100.010", "11.010"]);
    assert!(!text.contains('\r'));
}

#[test]
fn dual_needs_golden_base() {
    let o = galperin(&["digits", "--base", "10", "--dual"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn digits_json_has_schema() {
    let o = galperin(&["digits", "--base", "2", "--mantissa", "1", "--to", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["rows"][2]["count_base_b"], "11001");
}

#[test]
fn trace_round_trip() {
    let dir = std::env::temp_dir().join(format!("galperin-trace-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("trace.json");
    let o = galperin(&["trace", "--base", "3", "--mantissa", "2", "--format", "json", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let doc = read_trace_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let spec = BilliardSpec::<Rational>::standard(&Base::integer(3), &Rational::from(2), 0).unwrap();
    let traj = simulate(&spec, 1000).unwrap();
    assert_eq!(doc.events.len(), traj.events.len());
    let exact = |n: &Number| match n {
        Number::Exact(q) => q.clone(),
        other => panic!("not exact: {other:?}"),
    };
    for (r, e) in doc.events.iter().zip(&traj.events) {
        assert_eq!(r.n, e.index);
        assert_eq!(r.kind, e.kind);
        assert_eq!(exact(&r.t), e.state.t);
        assert_eq!(exact(&r.X), e.state.X);
        assert_eq!(exact(&r.x), e.state.x);
        assert_eq!(exact(&r.V), e.state.V);
        assert_eq!(exact(&r.v), e.state.v);
    }
    // serialising what was read gives the same text back
    let again = serde_json::to_string_pretty(&doc).unwrap();
    assert_eq!(read_trace_json(&again).unwrap().events, doc.events);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn binary_trace_csv() {
    let o = galperin(&["trace", "--base", "2", "--mantissa", "1"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,kind,t,X,x,V,v");
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[1], "1,BB,1,-1,-1,3/5,8/5");
    assert_eq!(lines[6], "6,BW,293/88,-125/88,0,-117/125,-88/125");
}

#[test]
fn interval_trace_has_radius() {
    let o = galperin(&["trace", "--base", "phi", "--mantissa", "2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = read_trace_json(&stdout(&o)).unwrap();
    assert_eq!(doc.events.len(), 8);
    assert!(matches!(doc.events[0].X, Number::Approx { .. }));
    assert_eq!(doc.events[1].kind, CollisionKind::BallWall);
}

#[test]
fn equal_masses_flagged() {
    let o = galperin(&["simulate", "--mantissa", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "3");
    assert_eq!(row[2], "4");
    let err = String::from_utf8(o.stderr).unwrap();
    let flag: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(flag["reason"], "degeneracy");
    assert_eq!(flag["exit_code"], 2);
}

#[test]
fn exit_codes() {
    assert_eq!(galperin(&["digits", "--mantissa", "2"]).status.code(), Some(0));
    assert_eq!(galperin(&["digits", "--base", "1"]).status.code(), Some(1));
    assert_eq!(galperin(&["nonsense"]).status.code(), Some(1));
    assert_eq!(galperin(&["trace", "--mantissa", "2", "--step-limit", "10"]).status.code(), Some(3));
    assert_eq!(galperin(&["digits", "--mantissa", "40", "--precision-cap", "64"]).status.code(), Some(4));
}

#[test]
fn simulate_checks_every_state() {
    let o = galperin(&["simulate", "--base", "5", "--mantissa", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..6], ["78", "OutgoingState", "78", "false", "true", "true"]);
}

#[test]
fn error_map_file_and_sidecar() {
    let dir = std::env::temp_dir().join(format!("galperin-map-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("map.csv");
    let p = path.to_str().unwrap();
    let o = galperin(&[
        "error-map", "--b-min", "6", "--b-max", "14", "--b-steps", "9", "--n-min", "1", "--n-max", "1", "--n-steps", "1",
        "--workers", "2", "--out", p,
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let ones: Vec<&str> = text.lines().skip(1).filter(|l| l.ends_with(",1")).collect();
    assert_eq!(ones, ["6,1,1", "7,1,1", "14,1,1"]);

    let o = galperin(&[
        "error-map", "--b-min", "10", "--b-max", "10", "--b-steps", "1", "--n-min", "1", "--n-max", "60", "--n-steps",
        "2", "--precision-cap", "128", "--out", p,
    ]);
    assert_eq!(o.status.code(), Some(2));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().any(|l| l == "10,60,-1"), "{text}");
    let side = std::fs::read_to_string(dir.join("map.csv.ambiguous.csv")).unwrap();
    assert!(side.contains("10,60"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn check_reports_invariants() {
    let o = galperin(&["check", "--base", "3", "--mantissa", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("energy,true,true,0e0"));
    assert!(text.contains("averaged_position,false,false"));
    let o = galperin(&["check", "--q", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("chevalley_j"));
}

#[test]
fn bench_is_json() {
    let o = galperin(&["bench", "--mantissa", "1", "--to", "2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"][1]["events"], 314);
    assert_eq!(v["rows"][1]["count_matches"], true);
}

#[test]
fn library_entry_point() {
    let cfg = RunConfig::parse_from(["galperin", "digits", "--base", "e", "--mantissa", "4"]).unwrap();
    let out = execute(&cfg).unwrap();
    assert!(out.body.contains("4,171,101002.,10.1002,0.0001,0,false"));
    assert_eq!(out.exit_code(), 0);
}
