//! Oracles and fixtures shared by the integration tests. Nothing here calls
//! into the library's own constructions of the same objects.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

pub type Dense = Vec<Vec<Complex64>>;

pub fn digits(mut x: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (k, &d) in dims.iter().enumerate().rev() {
        out[k] = x % d;
        x /= d;
    }
    out
}

pub fn index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// `e^{2πi xy/D}/√D`.
pub fn dft(d: usize) -> Dense {
    let s = 1.0 / (d as f64).sqrt();
    (0..d)
        .map(|y| {
            (0..d)
                .map(|x| Complex64::from_polar(s, 2.0 * PI * ((x * y) % d) as f64 / d as f64))
                .collect()
        })
        .collect()
}

/// Sends `|x_1 … x_n⟩` over `dims` to `|x_n … x_1⟩` over the reversed dims.
pub fn reversal(dims: &[usize]) -> Dense {
    let d: usize = dims.iter().product();
    let rdims: Vec<usize> = dims.iter().rev().copied().collect();
    let mut m = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    for x in 0..d {
        let mut v = digits(x, dims);
        v.reverse();
        m[index(&v, &rdims)][x] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn to_dense(m: &nalgebra::DMatrix<Complex64>) -> Dense {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum())
                .collect()
        })
        .collect()
}

pub fn max_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}

/// Single-quantum frequency of spin `s` on a four-qubit register in state
/// `bits` (the other three bits matter), with `E = Σ ω m + Σ J m m`.
pub fn qubit_line(larmor: &[f64; 4], j: &[[f64; 4]; 4], s: usize, bits: [usize; 4]) -> f64 {
    let m = |b: usize| 0.5 - b as f64;
    let mut f = larmor[s];
    for t in 0..4 {
        if t != s {
            f += j[s][t] * m(bits[t]);
        }
    }
    f
}

/// (QQT transition, emulating QQQQ transitions), levels 1-based.
pub type Row = (&'static str, &'static [&'static str]);

pub const TABLE_Q1: &[Row] = &[
    ("1-7", &["1-9"]),
    ("2-8", &["2-10", "3-11"]),
    ("3-9", &["4-12"]),
    ("4-10", &["5-13"]),
    ("5-11", &["6-14", "7-15"]),
    ("6-12", &["8-16"]),
];

pub const TABLE_Q2: &[Row] = &[
    ("1-4", &["1-5"]),
    ("2-5", &["2-6", "3-7"]),
    ("3-6", &["4-8"]),
    ("7-10", &["9-13"]),
    ("8-11", &["10-14", "11-15"]),
    ("9-12", &["12-16"]),
];

pub const TABLE_T: &[Row] = &[
    ("1-2", &["1-3", "2-4"]),
    ("2-3", &["1-2", "3-4"]),
    ("4-5", &["5-7", "6-8"]),
    ("5-6", &["5-6", "7-8"]),
    ("7-8", &["9-11", "10-12"]),
    ("8-9", &["9-10", "11-12"]),
    ("10-11", &["13-15", "14-16"]),
    ("11-12", &["13-14", "15-16"]),
];

pub fn parse_pair(s: &str) -> (usize, usize) {
    let (a, b) = s.split_once('-').expect("a-b");
    (a.trim().parse().unwrap(), b.trim().parse().unwrap())
}

/// Every Table 1 row with its QQT spin label.
pub fn table_rows() -> Vec<(&'static str, (usize, usize), Vec<(usize, usize)>)> {
    let mut out = Vec::new();
    for (label, rows) in [("Q1", TABLE_Q1), ("Q2", TABLE_Q2), ("T", TABLE_T)] {
        for (qqt, qqqq) in rows {
            out.push((label, parse_pair(qqt), qqqq.iter().map(|s| parse_pair(s)).collect()));
        }
    }
    out
}

pub const HADAMARD: [[f64; 2]; 2] = [[1.0, 1.0], [1.0, -1.0]];

/// `C` with `ω = e^{2πi/3}`: rows `(1,1,1)`, `(1,ω,ω²)`, `(1,ω²,ω)`.
pub fn chrestenson() -> Dense {
    let w = |k: u32| Complex64::from_polar(1.0 / 3f64.sqrt(), 2.0 * PI * k as f64 / 3.0);
    vec![vec![w(0), w(0), w(0)], vec![w(0), w(1), w(2)], vec![w(0), w(2), w(1)]]
}
