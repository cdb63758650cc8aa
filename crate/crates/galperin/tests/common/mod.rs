#![allow(dead_code)]

use galperin::cli_io::{execute, RunConfig};

// N, count, count in base b, shifted, unit
pub const TEN: &str = "
0 4 4 4 1
1 31 31 3.1 0.1
2 314 314 3.14 0.01
3 3141 3141 3.141 0.001
4 31415 31415 3.1415 0.0001
5 314159 314159 3.14159 0.00001
6 3141592 3141592 3.141592 0.000001
7 31415926 31415926 3.1415926 0.0000001
8 314159265 314159265 3.14159265 0.00000001
9 3141592653 3141592653 3.141592653 0.000000001
10 31415926535 31415926535 3.1415926535 0.0000000001";

pub const TWO: &str = "
0 4 100 100 1
1 6 110 11.0 0.1
2 12 1100 11.00 0.01
3 25 11001 11.001 0.001
4 50 110010 11.0010 0.0001
5 100 1100100 11.00100 0.00001
6 201 11001001 11.001001 0.000001
7 402 110010010 11.0010010 0.0000001
8 804 1100100100 11.00100100 0.00000001
9 1608 11001001000 11.001001000 0.000000001
10 3216 110010010000 11.0010010000 0.0000000001";

pub const THREE: &str = "
0 4 11 11 1
1 9 100 10.0 0.1
2 28 1001 10.01 0.01
3 84 10010 10.010 0.001
4 254 100102 10.0102 0.0001
5 763 1001021 10.01021 0.00001
6 2290 10010211 10.010211 0.000001
7 6870 100102110 10.0102110 0.0000001
8 20611 1001021101 10.01021101 0.00000001
9 61835 10010211012 10.010211012 0.000000001
10 185507 100102110122 10.0102110122 0.0000000001";

// N, count, count in base φ, Type I, Type II, unit
pub const PHI: &str = "
0 4 101. 100. 11. 1
1 5 1000. 100.0 11.0 0.1
2 8 10001. 100.01 11.01 0.01
3 13 100010. 100.010 11.010 0.001
4 21 1000100. 100.0100 11.0100 0.0001
5 34 10001000. 100.01001 11.01001 0.00001
6 56 100010010. 100.010010 11.010010 0.000001
7 91 1000100101. 100.0100101 11.0100101 0.0000001
8 147 10001001010. 100.01001010 11.01001010 0.00000001
9 238 100010010100. 100.010010101 11.010010101 0.000000001
10 386 1000100101010. 100.0100101010 11.0100101010 0.0000000001";

pub const E: &str = "
0 4 11. 11. 1
1 8 100. 10.0 0.1
2 23 1010. 10.10 0.01
3 63 10101. 10.101 0.001
4 171 101002. 10.1002 0.0001
5 466 1010100. 10.10100 0.00001
6 1267 10101001. 10.101001 0.000001
7 3445 101010020. 10.1010020 0.0000001
8 9364 1010100201. 10.10100201 0.00000001
9 25456 10101002012. 10.101002012 0.000000001
10 69198 101010020200. 10.1010020200 0.0000000001";

// the unit column lags a row from N = 7 on, so only the first seven are kept
pub const PI: &str = "
0 4 10. 10. 1
1 10 100. 10.0 0.1
2 31 301. 3.01 0.01
3 97 3010. 3.010 0.001
4 306 30110. 3.0110 0.0001
5 961 301102. 3.01102 0.00001
6 3020 3011021. 3.011021 0.000001
7 9488 30110210. 3.0110210 -
8 29809 301102110. 3.01102110 -
9 93648 3011021110. 3.011021110 -
10 294204 30110211100. 3.0110211100 -";

pub fn rows(base: &str, dual: bool) -> Vec<Vec<String>> {
    let mut args = vec!["galperin", "digits", "--base", base, "--mantissa", "0", "--to", "10"];
    if dual {
        args.push("--dual");
    }
    let out = execute(&RunConfig::parse_from(args).unwrap()).unwrap();
    let mut lines = out.body.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("N,count,count_base_b,shifted,error,epsilon,degenerate"));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

pub fn expected(table: &str) -> Vec<Vec<&str>> {
    table.trim().lines().map(|l| l.split_whitespace().collect()).collect()
}


/// Cells that differ from the printed table, as `base N=.. column: got vs want`.
pub fn table_mismatches(base: &str, table: &str) -> Vec<String> {
    let golden = base == "phi";
    let got = rows(base, golden);
    let want = expected(table);
    let mut bad = Vec::new();
    if got.len() != want.len() {
        bad.push(format!("{base}: {} rows, want {}", got.len(), want.len()));
        return bad;
    }
    // (table column, output column)
    let cols: &[(usize, usize)] = if golden { &[(1, 1), (2, 2), (3, 7), (4, 8), (5, 4)] } else { &[(1, 1), (2, 2), (3, 3), (4, 4)] };
    for (g, w) in got.iter().zip(&want) {
        if g[0] != w[0] {
            bad.push(format!("{base}: row {} has N={}", w[0], g[0]));
        }
        for &(tc, oc) in cols {
            if w[tc] != "-" && g[oc] != w[tc] {
                bad.push(format!("{base} N={} column {tc}: {} vs {}", w[0], g[oc], w[tc]));
            }
        }
    }
    bad
}

pub const TABLES: [(&str, &str); 6] = [("10", TEN), ("2", TWO), ("3", THREE), ("phi", PHI), ("e", E), ("pi", PI)];
