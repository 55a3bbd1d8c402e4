//! Exact arithmetic for integer-matrix endomorphisms of the torus `T² = R²/Z²`.
//!
//! Points are rationals with a common denominator and every operation here is
//! exact: application, preimages, and the periodic-point congruences
//! `Mⁿ·x ≡ ±x (mod Z²)`. Only [`eigenframe`] leaves the integers, since the
//! stable/unstable splitting of a hyperbolic matrix is irrational.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A 2×2 integer matrix, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntMatrix2 {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl IntMatrix2 {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Self::from_entries(a.into(), b.into(), c.into(), d.into())
    }

    pub fn from_entries(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Self {
        IntMatrix2 { a, b, c, d }
    }

    /// The matrix `[[4,1],[2,1]]` of the degree-2 construction.
    pub fn lattes_example() -> Self {
        Self::new(4, 1, 2, 1)
    }

    pub fn identity() -> Self {
        Self::new(1, 0, 0, 1)
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn trace(&self) -> BigInt {
        &self.a + &self.d
    }

    pub fn mul(&self, other: &IntMatrix2) -> IntMatrix2 {
        IntMatrix2 {
            a: &self.a * &other.a + &self.b * &other.c,
            b: &self.a * &other.b + &self.b * &other.d,
            c: &self.c * &other.a + &self.d * &other.c,
            d: &self.c * &other.b + &self.d * &other.d,
        }
    }

    /// `selfⁿ` by repeated squaring; `n = 0` gives the identity.
    pub fn pow(&self, mut n: u32) -> IntMatrix2 {
        let mut result = IntMatrix2::identity();
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        result
    }

    /// `self − s·I`.
    pub fn minus_scalar(&self, s: i64) -> IntMatrix2 {
        IntMatrix2 {
            a: &self.a - s,
            b: self.b.clone(),
            c: self.c.clone(),
            d: &self.d - s,
        }
    }

    /// Adjugate, so that `M · adj(M) = det(M)·I`.
    pub fn adjugate(&self) -> IntMatrix2 {
        IntMatrix2 {
            a: self.d.clone(),
            b: -&self.b,
            c: -&self.c,
            d: self.a.clone(),
        }
    }

    pub fn mul_vec(&self, x: &BigInt, y: &BigInt) -> (BigInt, BigInt) {
        (&self.a * x + &self.b * y, &self.c * x + &self.d * y)
    }

    pub fn to_f64(&self) -> Matrix2<f64> {
        let f = |v: &BigInt| v.to_f64().unwrap_or(f64::NAN);
        Matrix2::new(f(&self.a), f(&self.b), f(&self.c), f(&self.d))
    }

    /// Lower-triangular column Hermite basis `(h11, h21, h22)` of the lattice `M·Z²`:
    /// the columns `(h11, h21)` and `(0, h22)` span it, with `h11, h22 > 0` and
    /// `0 ≤ h21 < h22`. `None` when `M` is singular.
    pub fn hermite_basis(&self) -> Option<(BigInt, BigInt, BigInt)> {
        let det = self.det();
        if det.is_zero() {
            return None;
        }
        // Column operations on the top row (a, b) bring it to (g, 0).
        let ext = self.a.extended_gcd(&self.b);
        let (g, s, t) = (ext.gcd, ext.x, ext.y);
        let mut h21 = &s * &self.c + &t * &self.d;
        let mut h11 = g.clone();
        if h11.is_negative() {
            h11 = -h11;
            h21 = -h21;
        }
        let h22 = (&det / &g).abs();
        let h21 = h21.mod_floor(&h22);
        Some((h11, h21, h22))
    }

    /// A transversal of `Z² / M·Z²`, of size `|det M|`.
    pub fn coset_representatives(&self) -> Vec<(BigInt, BigInt)> {
        let Some((h11, _, h22)) = self.hermite_basis() else {
            return Vec::new();
        };
        let mut reps = Vec::new();
        let mut i = BigInt::zero();
        while i < h11 {
            let mut j = BigInt::zero();
            while j < h22 {
                reps.push((i.clone(), j.clone()));
                j += 1;
            }
            i += 1;
        }
        reps
    }
}

impl fmt::Display for IntMatrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}

impl FromStr for IntMatrix2 {
    type Err = Error;

    /// Parses `a,b,c,d` (row-major).
    fn from_str(s: &str) -> Result<Self> {
        let entries = s
            .split(',')
            .map(|e| e.trim().parse::<BigInt>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Input(format!("matrix '{s}': {e}")))?;
        match <[BigInt; 4]>::try_from(entries) {
            Ok([a, b, c, d]) => Ok(IntMatrix2::from_entries(a, b, c, d)),
            Err(v) => Err(Error::Input(format!(
                "matrix '{s}': expected 4 entries a,b,c,d, got {}",
                v.len()
            ))),
        }
    }
}

/// An exact point `(n1/d, n2/d)` of `T²`, always stored reduced.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalTorusPoint {
    n1: BigInt,
    n2: BigInt,
    d: BigInt,
}

impl RationalTorusPoint {
    /// Reduces `(n1/d, n2/d)` modulo `Z²` and to lowest terms.
    ///
    /// # Panics
    /// If `d == 0`.
    pub fn new(n1: BigInt, n2: BigInt, d: BigInt) -> Self {
        assert!(!d.is_zero(), "zero denominator");
        let (mut n1, mut n2, mut d) = (n1, n2, d);
        if d.is_negative() {
            n1 = -n1;
            n2 = -n2;
            d = -d;
        }
        let n1 = n1.mod_floor(&d);
        let n2 = n2.mod_floor(&d);
        let g = n1.gcd(&n2).gcd(&d);
        RationalTorusPoint {
            n1: n1 / &g,
            n2: n2 / &g,
            d: d / &g,
        }
    }

    pub fn from_i64(n1: i64, n2: i64, d: i64) -> Self {
        Self::new(n1.into(), n2.into(), d.into())
    }

    pub fn origin() -> Self {
        Self::from_i64(0, 0, 1)
    }

    /// The four 2-torsion points `(0,0), (1/2,0), (0,1/2), (1/2,1/2)`.
    pub fn two_torsion() -> [Self; 4] {
        [
            Self::from_i64(0, 0, 1),
            Self::from_i64(1, 0, 2),
            Self::from_i64(0, 1, 2),
            Self::from_i64(1, 1, 2),
        ]
    }

    pub fn n1(&self) -> &BigInt {
        &self.n1
    }

    pub fn n2(&self) -> &BigInt {
        &self.n2
    }

    pub fn denom(&self) -> &BigInt {
        &self.d
    }

    /// `−x mod Z²`.
    pub fn negate(&self) -> Self {
        Self::new(-&self.n1, -&self.n2, self.d.clone())
    }

    pub fn is_two_torsion(&self) -> bool {
        self.d <= BigInt::from(2)
    }

    pub fn to_f64(&self) -> Vector2<f64> {
        let d = self.d.to_f64().unwrap_or(f64::NAN);
        Vector2::new(
            self.n1.to_f64().unwrap_or(f64::NAN) / d,
            self.n2.to_f64().unwrap_or(f64::NAN) / d,
        )
    }
}

impl Ord for RationalTorusPoint {
    /// Lexicographic on coordinates: first `x1`, then `x2`.
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs1 = &self.n1 * &other.d;
        let rhs1 = &other.n1 * &self.d;
        lhs1.cmp(&rhs1).then_with(|| {
            let lhs2 = &self.n2 * &other.d;
            let rhs2 = &other.n2 * &self.d;
            lhs2.cmp(&rhs2)
        })
    }
}

impl PartialOrd for RationalTorusPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RationalTorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coord = |n: &BigInt| -> String {
            if n.is_zero() {
                "0".to_string()
            } else if self.d.is_one() {
                n.to_string()
            } else {
                let g = n.gcd(&self.d);
                format!("{}/{}", n / &g, &self.d / &g)
            }
        };
        write!(f, "({}, {})", coord(&self.n1), coord(&self.n2))
    }
}

/// `M·x mod Z²`.
pub fn apply(m: &IntMatrix2, x: &RationalTorusPoint) -> RationalTorusPoint {
    let (y1, y2) = m.mul_vec(&x.n1, &x.n2);
    RationalTorusPoint::new(y1, y2, x.d.clone())
}

/// All solutions of `M·x ≡ y (mod Z²)`; there are `|det M|` of them.
///
/// Each solution is `adj(M)·(y + k) / det(M)` for `k` running over a
/// transversal of `Z²/M·Z²`. Singular matrices have no finite preimage set
/// and yield an empty result.
pub fn preimages(m: &IntMatrix2, y: &RationalTorusPoint) -> BTreeSet<RationalTorusPoint> {
    let det = m.det();
    if det.is_zero() {
        return BTreeSet::new();
    }
    let adj = m.adjugate();
    m.coset_representatives()
        .into_iter()
        .map(|(i, j)| {
            let v1 = &y.n1 + &i * &y.d;
            let v2 = &y.n2 + &j * &y.d;
            let (x1, x2) = adj.mul_vec(&v1, &v2);
            RationalTorusPoint::new(x1, x2, &det * &y.d)
        })
        .collect()
}

/// Which congruence `Mⁿ·x ≡ ±x` is being solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_i64(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    /// The operator in `Mⁿ ∓ I`: `-` for [`Sign::Plus`], `+` for [`Sign::Minus`].
    pub fn operator(self) -> char {
        match self {
            Sign::Plus => '-',
            Sign::Minus => '+',
        }
    }
}

/// Smith normal form `D = U·B·V` of a 2×2 integer matrix, with `U, V`
/// unimodular and `D = diag(d1, d2)`, `d1 | d2`, both nonnegative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    pub diag: [BigInt; 2],
    pub u: IntMatrix2,
    pub v: IntMatrix2,
}

pub fn smith_normal_form(b: &IntMatrix2) -> SmithForm {
    let mut m = [[b.a.clone(), b.b.clone()], [b.c.clone(), b.d.clone()]];
    let mut u = [
        [BigInt::one(), BigInt::zero()],
        [BigInt::zero(), BigInt::one()],
    ];
    let mut v = u.clone();

    fn swap_rows(m: &mut [[BigInt; 2]; 2]) {
        m.swap(0, 1);
    }
    fn swap_cols(m: &mut [[BigInt; 2]; 2]) {
        for row in m.iter_mut() {
            row.swap(0, 1);
        }
    }
    // row1 -= q * row0
    fn row_axpy(m: &mut [[BigInt; 2]; 2], q: &BigInt) {
        let [top, bottom] = m;
        for (a, b) in bottom.iter_mut().zip(top.iter()) {
            *a -= q * b;
        }
    }
    // col1 -= q * col0
    fn col_axpy(m: &mut [[BigInt; 2]; 2], q: &BigInt) {
        for row in m.iter_mut() {
            let t = q * &row[0];
            row[1] -= t;
        }
    }

    loop {
        // Pivot: smallest nonzero entry moves to (0,0).
        let mut best: Option<(usize, usize)> = None;
        for i in 0..2 {
            for j in 0..2 {
                if m[i][j].is_zero() {
                    continue;
                }
                match best {
                    Some((bi, bj)) if m[bi][bj].abs() <= m[i][j].abs() => {}
                    _ => best = Some((i, j)),
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        if pi == 1 {
            swap_rows(&mut m);
            swap_rows(&mut u);
        }
        if pj == 1 {
            swap_cols(&mut m);
            swap_cols(&mut v);
        }

        let q = m[1][0].div_floor(&m[0][0]);
        row_axpy(&mut m, &q);
        row_axpy(&mut u, &q);
        let q = m[0][1].div_floor(&m[0][0]);
        col_axpy(&mut m, &q);
        col_axpy(&mut v, &q);
        if !m[1][0].is_zero() || !m[0][1].is_zero() {
            continue;
        }
        if !m[1][1].is_zero() && !m[1][1].is_multiple_of(&m[0][0]) {
            // row0 += row1 brings m[1][1] into the first row; reduce again.
            for j in 0..2 {
                let t = m[1][j].clone();
                m[0][j] += t;
                let t = u[1][j].clone();
                u[0][j] += t;
            }
            continue;
        }
        break;
    }

    for i in 0..2 {
        if m[i][i].is_negative() {
            for j in 0..2 {
                m[i][j] = -&m[i][j];
                u[i][j] = -&u[i][j];
            }
        }
    }

    let to_matrix = |x: &[[BigInt; 2]; 2]| {
        IntMatrix2::from_entries(
            x[0][0].clone(),
            x[0][1].clone(),
            x[1][0].clone(),
            x[1][1].clone(),
        )
    };
    let [[d1, _], [_, d2]] = m;
    SmithForm {
        diag: [d1, d2],
        u: to_matrix(&u),
        v: to_matrix(&v),
    }
}

/// The full solution set of `Mⁿ·x ≡ sign·x (mod Z²)`, of size `|det(Mⁿ − sign·I)|`.
///
/// With `D = U·B·V` the Smith form of `B = Mⁿ − sign·I`, `B·x ∈ Z²` holds exactly
/// when `V⁻¹·x ∈ (1/d1)Z × (1/d2)Z`, so the solutions are `V·(i/d1, j/d2)`.
pub fn solve_congruence(
    m: &IntMatrix2,
    n: u32,
    sign: Sign,
) -> Result<BTreeSet<RationalTorusPoint>> {
    let b = m.pow(n).minus_scalar(sign.as_i64());
    if b.det().is_zero() {
        return Err(Error::DegenerateCongruence {
            n,
            sign: sign.operator(),
        });
    }
    let snf = smith_normal_form(&b);
    let [d1, d2] = &snf.diag;
    let denom = d1 * d2;
    let v = &snf.v;
    let mut out = BTreeSet::new();
    let mut i = BigInt::zero();
    while &i < d1 {
        let mut j = BigInt::zero();
        while &j < d2 {
            let (x1, x2) = v.mul_vec(&(&i * d2), &(&j * d1));
            out.insert(RationalTorusPoint::new(x1, x2, denom.clone()));
            j += 1;
        }
        i += 1;
    }
    Ok(out)
}

/// The solution set of `Mⁿ·x ≡ sign·x` by exhaustive search over the grid
/// `(1/D)Z²`, `D = |det(Mⁿ − sign·I)|`, which contains every solution.
/// Quadratic in `D`; refuses `D > 4096`.
pub fn enumerate_congruence(
    m: &IntMatrix2,
    n: u32,
    sign: Sign,
) -> Result<BTreeSet<RationalTorusPoint>> {
    let b = m.pow(n).minus_scalar(sign.as_i64());
    let d = b.det().abs();
    if d.is_zero() {
        return Err(Error::DegenerateCongruence {
            n,
            sign: sign.operator(),
        });
    }
    let size = d
        .to_i64()
        .filter(|&v| v <= 4096)
        .ok_or_else(|| Error::Input(format!("grid of side {d} is too large to enumerate")))?;
    let mut out = BTreeSet::new();
    for i in 0..size {
        for j in 0..size {
            let (y1, y2) = b.mul_vec(&BigInt::from(i), &BigInt::from(j));
            if (y1 % &d).is_zero() && (y2 % &d).is_zero() {
                out.insert(RationalTorusPoint::from_i64(i, j, size));
            }
        }
    }
    Ok(out)
}

/// Stable/unstable splitting of a hyperbolic matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenFrame {
    pub lambda_u: f64,
    pub lambda_s: f64,
    pub e_u: Vector2<f64>,
    pub e_s: Vector2<f64>,
}

impl EigenFrame {
    /// Coefficients `(α, β)` with `v = α·e_u + β·e_s`.
    pub fn coordinates(&self, v: Vector2<f64>) -> (f64, f64) {
        let det = self.e_u.x * self.e_s.y - self.e_u.y * self.e_s.x;
        let alpha = (v.x * self.e_s.y - v.y * self.e_s.x) / det;
        let beta = (self.e_u.x * v.y - self.e_u.y * v.x) / det;
        (alpha, beta)
    }

    /// Projection onto `e_u` along `e_s`.
    pub fn project_unstable(&self, v: Vector2<f64>) -> Vector2<f64> {
        self.e_u * self.coordinates(v).0
    }
}

const UNIT_CIRCLE_TOL: f64 = 1e-9;

/// Real eigen-splitting with `|λ_u| > 1 > |λ_s|`.
pub fn eigenframe(m: &IntMatrix2) -> Result<EigenFrame> {
    let mf = m.to_f64();
    let tr = mf.trace();
    let det = mf.determinant();
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        return Err(Error::NotHyperbolic(format!(
            "{m} has non-real eigenvalues"
        )));
    }
    // Larger root first, the other from the product to avoid cancellation.
    let big = (tr + tr.signum() * disc.sqrt()) / 2.0;
    let big = if tr == 0.0 { disc.sqrt() / 2.0 } else { big };
    let small = if big == 0.0 { 0.0 } else { det / big };
    for lam in [big, small] {
        if (lam.abs() - 1.0).abs() < UNIT_CIRCLE_TOL {
            return Err(Error::NotHyperbolic(format!(
                "{m} has eigenvalue {lam} on the unit circle"
            )));
        }
    }
    if !(big.abs() > 1.0 && small.abs() < 1.0) {
        return Err(Error::NotHyperbolic(format!(
            "{m} has eigenvalues {big}, {small}; need one expanding and one contracting"
        )));
    }
    Ok(EigenFrame {
        lambda_u: big,
        lambda_s: small,
        e_u: eigenvector(&mf, big),
        e_s: eigenvector(&mf, small),
    })
}

fn eigenvector(m: &Matrix2<f64>, lambda: f64) -> Vector2<f64> {
    let v1 = Vector2::new(m[(0, 1)], lambda - m[(0, 0)]);
    let v2 = Vector2::new(lambda - m[(1, 1)], m[(1, 0)]);
    let v = if v1.norm() >= v2.norm() { v1 } else { v2 };
    let v = v.normalize();
    if v.x < 0.0 || (v.x == 0.0 && v.y < 0.0) {
        -v
    } else {
        v
    }
}

/// Moduli of the (possibly complex) eigenvalues of an integer matrix.
pub fn eigenvalue_moduli(m: &IntMatrix2) -> [f64; 2] {
    let mf = m.to_f64();
    let tr = mf.trace();
    let det = mf.determinant();
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [((tr + r) / 2.0).abs(), ((tr - r) / 2.0).abs()]
    } else {
        let modulus = det.abs().sqrt();
        [modulus, modulus]
    }
}
