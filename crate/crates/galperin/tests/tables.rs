mod common;

use common::*;

fn check(base: &str, table: &str) {
    let bad = table_mismatches(base, table);
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn decimal() {
    check("10", TEN);
}

#[test]
fn binary() {
    check("2", TWO);
}

#[test]
fn ternary() {
    check("3", THREE);
}

#[test]
fn golden() {
    check("phi", PHI);
}

#[test]
fn euler() {
    check("e", E);
}

#[test]
fn pi_base() {
    check("pi", PI);
}

#[test]
fn only_n_zero_is_degenerate() {
    for (base, _) in TABLES {
        for r in rows(base, false) {
            assert_eq!(r[6] == "true", r[0] == "0", "base {base} N={}", r[0]);
        }
    }
}

#[test]
fn pi_base_first_row_is_off_by_one() {
    let r = rows("pi", false);
    assert_eq!(r[1][5], "1");
    assert!(r[2..].iter().all(|r| r[5] == "0"));
}
