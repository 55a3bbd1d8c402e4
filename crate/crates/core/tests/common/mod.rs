//! Brute-force oracles over finite grids, written against plain `i64`
//! arithmetic and independent of the library's Smith-form machinery.
#![allow(dead_code)]

use std::collections::BTreeSet;

use lattes_da::lattice::{IntMatrix2, RationalTorusPoint};
use num_traits::ToPrimitive;

pub type M = [[i64; 2]; 2];

pub const A: M = [[4, 1], [2, 1]];

/// Further hyperbolic matrices of determinant ±2.
pub const OTHERS: [M; 4] = [
    [[3, 1], [1, 1]],
    [[0, 1], [2, 3]],
    [[5, 3], [1, 1]],
    [[2, 2], [1, 0]],
];

pub fn int_matrix(m: M) -> IntMatrix2 {
    IntMatrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

pub fn mat_mul(a: M, b: M) -> M {
    let mut c = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mat_pow(m: M, n: u32) -> M {
    (0..n).fold([[1, 0], [0, 1]], |acc, _| mat_mul(acc, m))
}

pub fn det(m: M) -> i64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Point `(i/l, j/l)` reduced to lowest terms with coordinates in `[0, 1)`.
pub fn reduced(i: i64, j: i64, l: i64) -> (i64, i64, i64) {
    let (i, j) = (i.rem_euclid(l), j.rem_euclid(l));
    let g = gcd(gcd(i, j), l);
    (i / g, j / g, l / g)
}

pub fn from_lib(x: &RationalTorusPoint) -> (i64, i64, i64) {
    reduced(
        x.n1().to_i64().unwrap(),
        x.n2().to_i64().unwrap(),
        x.denom().to_i64().unwrap(),
    )
}

/// All `x ∈ (1/l)Z² mod 1` with `B·x ≡ 0`.
fn grid_kernel(b: M, l: i64) -> BTreeSet<(i64, i64, i64)> {
    let mut out = BTreeSet::new();
    for i in 0..l {
        for j in 0..l {
            if (b[0][0] * i + b[0][1] * j) % l == 0 && (b[1][0] * i + b[1][1] * j) % l == 0 {
                out.insert(reduced(i, j, l));
            }
        }
    }
    out
}

/// Solutions of `Mⁿx ≡ s·x` (s = ±1).
pub fn brute_congruence(m: M, n: u32, s: i64) -> BTreeSet<(i64, i64, i64)> {
    let p = mat_pow(m, n);
    let b = [[p[0][0] - s, p[0][1]], [p[1][0], p[1][1] - s]];
    let l = det(b).abs();
    assert!(l > 0, "degenerate congruence");
    grid_kernel(b, l)
}

/// Canonical representative of the class `{x, −x}`.
pub fn sphere_class(x: (i64, i64, i64)) -> (i64, i64, i64) {
    let (i, j, l) = x;
    let neg = reduced(-i, -j, l);
    // Same denominator, so comparing numerators compares coordinates.
    if (neg.0, neg.1) < (i, j) {
        neg
    } else {
        x
    }
}

/// Number of fixed points of `fⁿ` on the sphere.
pub fn brute_sphere_fixed_count(m: M, n: u32) -> usize {
    brute_congruence(m, n, 1)
        .into_iter()
        .chain(brute_congruence(m, n, -1))
        .map(sphere_class)
        .collect::<BTreeSet<_>>()
        .len()
}

/// All `x` with `M·x ≡ y`, where `y = (a/q, b/q)`.
pub fn brute_preimages(m: M, y: (i64, i64, i64)) -> BTreeSet<(i64, i64, i64)> {
    let (a, b, q) = y;
    let l = det(m).abs() * q;
    let mut out = BTreeSet::new();
    for i in 0..l {
        for j in 0..l {
            // M·(i/l, j/l) − (a/q, b/q) ∈ Z²  ⇔  M·(i, j) − (a, b)·(l/q) ≡ 0 mod l
            let r1 = m[0][0] * i + m[0][1] * j - a * (l / q);
            let r2 = m[1][0] * i + m[1][1] * j - b * (l / q);
            if r1.rem_euclid(l) == 0 && r2.rem_euclid(l) == 0 {
                out.insert(reduced(i, j, l));
            }
        }
    }
    out
}

pub fn apply(m: M, x: (i64, i64, i64)) -> (i64, i64, i64) {
    let (i, j, l) = x;
    reduced(m[0][0] * i + m[0][1] * j, m[1][0] * i + m[1][1] * j, l)
}

/// Sphere points `p` on the grid `(1/l)Z²` at which `f` fails to be locally
/// injective: fewer than `|det|` sphere preimages of `f(p)`.
pub fn brute_critical_points(m: M, l: i64) -> BTreeSet<(i64, i64, i64)> {
    let d = det(m).unsigned_abs() as usize;
    let mut crit = BTreeSet::new();
    for i in 0..l {
        for j in 0..l {
            let p = reduced(i, j, l);
            let y = apply(m, p);
            let neg_y = reduced(-y.0, -y.1, y.2);
            let pre: BTreeSet<_> = brute_preimages(m, y)
                .into_iter()
                .chain(brute_preimages(m, neg_y))
                .map(sphere_class)
                .collect();
            let branch = 2 * p.0 % p.2 == 0 && 2 * p.1 % p.2 == 0;
            // At a branch value the 2-torsion preimages count once but are not critical.
            if pre.len() < d && !branch {
                crit.insert(sphere_class(p));
            }
        }
    }
    crit
}
