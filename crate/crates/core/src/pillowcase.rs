//! The pillowcase sphere `S² = T²/(x ~ −x)` and the Lattès map it inherits.
//!
//! A linear endomorphism commutes with `x ↦ −x`, so it descends to a branched
//! self-cover `f` of the quotient. The quotient map has four branch points, the
//! 2-torsion classes, and everything about the critical structure of `f` can be
//! read off exactly from rational arithmetic on the torus.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::Vector2;
use num_bigint::BigInt;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::lattice::{
    apply, eigenvalue_moduli, preimages, solve_congruence, IntMatrix2, RationalTorusPoint, Sign,
};

/// Exact point of the pillowcase, stored as its canonical lift: the
/// lexicographically smaller of `x` and `−x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpherePoint {
    rep: RationalTorusPoint,
}

impl SpherePoint {
    pub fn rep(&self) -> &RationalTorusPoint {
        &self.rep
    }

    pub fn is_branch_point(&self) -> bool {
        self.rep.is_two_torsion()
    }

    pub fn to_f64(&self) -> SpherePointF {
        SpherePointF::project(self.rep.to_f64())
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "π{}", self.rep)
    }
}

/// `π(x)`.
pub fn project(x: &RationalTorusPoint) -> SpherePoint {
    let neg = x.negate();
    let rep = if neg < *x { neg } else { x.clone() };
    SpherePoint { rep }
}

/// `π⁻¹(s) = {x, −x}`, a single point exactly at the branch points.
pub fn fiber(s: &SpherePoint) -> BTreeSet<RationalTorusPoint> {
    [s.rep.clone(), s.rep.negate()].into_iter().collect()
}

/// The Lattès map `f` with `π∘M = f∘π`.
pub fn induced_apply(m: &IntMatrix2, s: &SpherePoint) -> SpherePoint {
    project(&apply(m, &s.rep))
}

/// `f⁻¹(s)` as a set of sphere points.
pub fn sphere_preimages(m: &IntMatrix2, s: &SpherePoint) -> BTreeSet<SpherePoint> {
    fiber(s)
        .iter()
        .flat_map(|y| preimages(m, y))
        .map(|x| project(&x))
        .collect()
}

/// Branch points of `π` and their images under `f`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchData {
    pub branch_points: [SpherePoint; 4],
    pub branch_values: [SpherePoint; 4],
}

pub fn branch_data(m: &IntMatrix2) -> BranchData {
    let branch_points = RationalTorusPoint::two_torsion().map(|x| project(&x));
    let branch_values = branch_points.clone().map(|s| induced_apply(m, &s));
    BranchData {
        branch_points,
        branch_values,
    }
}

fn require_degree_two(m: &IntMatrix2) -> Result<()> {
    let det = m.det();
    if det.abs() != BigInt::from(2) {
        return Err(Error::UnsupportedDegree(format!("det {m} = {det}")));
    }
    Ok(())
}

/// Critical points of `f`: classes of non-branch points that `M` sends onto a
/// branch point. These are exactly the points whose image has one preimage.
pub fn critical_points_f(m: &IntMatrix2) -> Result<BTreeSet<SpherePoint>> {
    require_degree_two(m)?;
    Ok(RationalTorusPoint::two_torsion()
        .iter()
        .flat_map(|b| preimages(m, b))
        .filter(|x| !x.is_two_torsion())
        .map(|x| project(&x))
        .collect())
}

/// True iff no eigenvalue of `M` lies on the unit circle.
pub fn homology_hyperbolic(m: &IntMatrix2) -> bool {
    eigenvalue_moduli(m).iter().all(|r| (r - 1.0).abs() > 1e-9)
}

/// Forward orbit of a critical value, up to the first repeated point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PostcriticalOrbit {
    pub critical_point: SpherePoint,
    /// Starts at the critical value; `points[cycle_start..]` is the cycle.
    pub points: Vec<SpherePoint>,
    pub cycle_start: usize,
}

impl PostcriticalOrbit {
    pub fn cycle(&self) -> &[SpherePoint] {
        &self.points[self.cycle_start..]
    }
}

impl fmt::Display for PostcriticalOrbit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ↦ ", self.critical_point)?;
        for (i, p) in self.points.iter().enumerate() {
            if i > 0 {
                write!(f, " → ")?;
            }
            if i == self.cycle_start {
                write!(f, "[")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "] (period {})", self.points.len() - self.cycle_start)
    }
}

const ORBIT_LIMIT: usize = 100_000;

fn postcritical_orbit(m: &IntMatrix2, c: &SpherePoint) -> Option<PostcriticalOrbit> {
    let mut points = vec![induced_apply(m, c)];
    while points.len() < ORBIT_LIMIT {
        let next = induced_apply(m, points.last().unwrap());
        if let Some(i) = points.iter().position(|p| *p == next) {
            return Some(PostcriticalOrbit {
                critical_point: c.clone(),
                points,
                cycle_start: i,
            });
        }
        points.push(next);
    }
    None
}

/// Exact critical structure of a degree-2 Lattès map and the outcome of each
/// structural lemma on it.
#[derive(Clone, Debug)]
pub struct LattesReport {
    pub matrix: IntMatrix2,
    pub branch: BranchData,
    pub crit_f: BTreeSet<SpherePoint>,
    pub crit_values_f: BTreeSet<SpherePoint>,
    pub postcritical: Vec<PostcriticalOrbit>,
    /// `f(Crit f) ⊆ π(Crit π)`.
    pub ram: bool,
    /// `Crit f ∩ π(Crit π) = ∅`.
    pub crit: bool,
    /// `f(π(Crit π)) ⊆ π(Crit π)`.
    pub inv: bool,
    /// No critical point of `f` is periodic.
    pub nonperiodic: bool,
    /// Every critical orbit is finite.
    pub postcritically_finite: bool,
    pub homology_hyperbolic: bool,
    /// A point `p` with `f⁻¹(p) = {p}`, if any.
    pub totally_invariant_point: Option<SpherePoint>,
}

impl LattesReport {
    pub fn all_pass(&self) -> bool {
        self.ram
            && self.crit
            && self.inv
            && self.nonperiodic
            && self.postcritically_finite
            && self.homology_hyperbolic
    }

    pub fn flags(&self) -> [(&'static str, bool); 6] {
        [
            ("ram", self.ram),
            ("crit", self.crit),
            ("inv", self.inv),
            ("nonperiodic", self.nonperiodic),
            ("postcritically_finite", self.postcritically_finite),
            ("homology_hyperbolic", self.homology_hyperbolic),
        ]
    }

    /// `branch_point,image` pairs.
    pub fn branch_orbit(&self) -> Vec<(SpherePoint, SpherePoint)> {
        self.branch
            .branch_points
            .iter()
            .cloned()
            .zip(self.branch.branch_values.iter().cloned())
            .collect()
    }
}

impl fmt::Display for LattesReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |set: &BTreeSet<SpherePoint>| {
            set.iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        writeln!(f, "matrix {} (det {})", self.matrix, self.matrix.det())?;
        writeln!(f, "critical points:  {{{}}}", join(&self.crit_f))?;
        writeln!(f, "critical values:  {{{}}}", join(&self.crit_values_f))?;
        writeln!(f, "branch values:")?;
        for (b, v) in self.branch_orbit() {
            writeln!(f, "  {b} → {v}")?;
        }
        writeln!(f, "postcritical orbits:")?;
        for orbit in &self.postcritical {
            writeln!(f, "  {orbit}")?;
        }
        for (name, ok) in self.flags() {
            writeln!(f, "{name:<22} {}", if ok { "pass" } else { "FAIL" })?;
        }
        match &self.totally_invariant_point {
            Some(p) => writeln!(f, "topological polynomial: yes, f⁻¹({p}) = {{{p}}}"),
            None => writeln!(f, "topological polynomial: no point with f⁻¹(p) = {{p}}"),
        }
    }
}

/// Checks every structural property of the Lattès map induced by `m` by exact
/// enumeration. Requires `|det m| = 2` and no eigenvalue on the unit circle.
pub fn verify_lattes(m: &IntMatrix2) -> Result<LattesReport> {
    require_degree_two(m)?;
    if !homology_hyperbolic(m) {
        return Err(Error::NotHyperbolic(format!(
            "{m} has an eigenvalue on the unit circle"
        )));
    }
    let branch = branch_data(m);
    let branch_set: BTreeSet<SpherePoint> = branch.branch_points.iter().cloned().collect();
    let crit_f = critical_points_f(m)?;
    let crit_values_f: BTreeSet<SpherePoint> = crit_f.iter().map(|c| induced_apply(m, c)).collect();

    let orbits: Vec<Option<PostcriticalOrbit>> =
        crit_f.iter().map(|c| postcritical_orbit(m, c)).collect();
    let postcritically_finite = orbits.iter().all(Option::is_some);
    let postcritical: Vec<PostcriticalOrbit> = orbits.into_iter().flatten().collect();

    let ram = crit_values_f.is_subset(&branch_set);
    let crit = crit_f.is_disjoint(&branch_set);
    let inv = branch.branch_values.iter().all(|v| branch_set.contains(v));
    let nonperiodic = postcritically_finite
        && postcritical
            .iter()
            .all(|o| !o.points.contains(&o.critical_point));
    let totally_invariant_point = crit_values_f
        .iter()
        .find(|v| {
            sphere_preimages(m, v)
                .into_iter()
                .eq(std::iter::once((*v).clone()))
        })
        .cloned();

    Ok(LattesReport {
        matrix: m.clone(),
        branch,
        crit_f,
        crit_values_f,
        postcritical,
        ram,
        crit,
        inv,
        nonperiodic,
        postcritically_finite,
        homology_hyperbolic: true,
        totally_invariant_point,
    })
}

/// Fixed points of `fⁿ`, assembled from the two torus congruences
/// `Mⁿx ≡ x` and `Mⁿx ≡ −x`.
#[derive(Clone, Debug)]
pub struct PeriodicCensus {
    pub n: u32,
    /// `det(Mⁿ − I)`.
    pub det_minus: BigInt,
    /// `det(Mⁿ + I)`.
    pub det_plus: BigInt,
    pub fix_plus: BTreeSet<RationalTorusPoint>,
    pub fix_minus: BTreeSet<RationalTorusPoint>,
    pub intersection: usize,
    /// 2-torsion points in `Fix⁺ ∪ Fix⁻`.
    pub two_torsion: usize,
    pub torus_count: usize,
    pub sphere_count: usize,
}

impl PeriodicCensus {
    /// `(1/n)·log Nₙ`.
    pub fn log_rate(&self) -> f64 {
        (self.sphere_count as f64).ln() / self.n as f64
    }

    /// The projected fixed-point set, for cross-checks against the count.
    pub fn sphere_points(&self) -> BTreeSet<SpherePoint> {
        self.fix_plus
            .iter()
            .chain(&self.fix_minus)
            .map(project)
            .collect()
    }

    pub const CSV_HEADER: &'static str = "n,det_minus,det_plus,torus_count,sphere_count,log_rate";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.n,
            self.det_minus,
            self.det_plus,
            self.torus_count,
            self.sphere_count,
            self.log_rate()
        )
    }
}

pub fn periodic_census(m: &IntMatrix2, n: u32) -> Result<PeriodicCensus> {
    let mn = m.pow(n);
    let fix_plus = solve_congruence(m, n, Sign::Plus)?;
    let fix_minus = solve_congruence(m, n, Sign::Minus)?;
    let intersection = fix_plus.intersection(&fix_minus).count();
    let two_torsion = RationalTorusPoint::two_torsion()
        .iter()
        .filter(|x| fix_plus.contains(x) || fix_minus.contains(x))
        .count();
    let torus_count = fix_plus.len() + fix_minus.len() - intersection;
    // Non-2-torsion solutions pair up as {x, −x}; 2-torsion ones are alone.
    let sphere_count = (torus_count - two_torsion) / 2 + two_torsion;
    Ok(PeriodicCensus {
        n,
        det_minus: mn.minus_scalar(1).det(),
        det_plus: mn.minus_scalar(-1).det(),
        fix_plus,
        fix_minus,
        intersection,
        two_torsion,
        torus_count,
        sphere_count,
    })
}

/// `Nₙf`: the number of fixed points of `fⁿ` on the sphere.
pub fn sphere_fixed_count(m: &IntMatrix2, n: u32) -> Result<usize> {
    periodic_census(m, n).map(|c| c.sphere_count)
}

/// A point of the pillowcase with floating-point coordinates, stored as the
/// canonical lift in `[0,1)²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePointF {
    rep: Vector2<f64>,
}

impl SpherePointF {
    /// Canonicalizes an arbitrary lift. `project(x)` and `project(−x)` are
    /// bitwise identical.
    pub fn project(x: Vector2<f64>) -> Self {
        let y = reduce_mod1(x);
        let z = reduce_mod1(-x);
        let rep = if (z.x, z.y) < (y.x, y.y) { z } else { y };
        SpherePointF { rep }
    }

    pub fn new(x1: f64, x2: f64) -> Self {
        Self::project(Vector2::new(x1, x2))
    }

    pub fn rep(&self) -> Vector2<f64> {
        self.rep
    }

    /// Distance in the quotient metric: `min(d(x, y), d(x, −y))` on the torus.
    pub fn distance(&self, other: &SpherePointF) -> f64 {
        torus_distance(self.rep, other.rep).min(torus_distance(self.rep, -other.rep))
    }

    pub fn is_finite(&self) -> bool {
        self.rep.x.is_finite() && self.rep.y.is_finite()
    }
}

/// Reduction of each coordinate into `[0, 1)`.
pub fn reduce_mod1(x: Vector2<f64>) -> Vector2<f64> {
    let r = |v: f64| {
        let w = v.rem_euclid(1.0);
        if w >= 1.0 {
            0.0
        } else {
            w
        }
    };
    Vector2::new(r(x.x), r(x.y))
}

/// Flat torus distance between two lifts.
pub fn torus_distance(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let d = a - b;
    let w = |v: f64| v - v.round();
    Vector2::new(w(d.x), w(d.y)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n1: i64, n2: i64, d: i64) -> RationalTorusPoint {
        RationalTorusPoint::from_i64(n1, n2, d)
    }

    fn s(n1: i64, n2: i64, d: i64) -> SpherePoint {
        project(&p(n1, n2, d))
    }

    #[test]
    fn projection_examples() {
        assert_eq!(s(3, 0, 4).rep(), &p(1, 0, 4));
        assert_eq!(s(0, 0, 1).rep(), &p(0, 0, 1));
        assert_eq!(s(1, 2, 3).rep(), &p(1, 2, 3));
        assert_eq!(s(2, 1, 3).rep(), &p(1, 2, 3));
    }

    #[test]
    fn fiber_examples() {
        assert_eq!(
            fiber(&s(1, 0, 2)).into_iter().collect::<Vec<_>>(),
            vec![p(1, 0, 2)]
        );
        assert_eq!(
            fiber(&s(1, 0, 4)).into_iter().collect::<Vec<_>>(),
            vec![p(1, 0, 4), p(3, 0, 4)]
        );
    }

    #[test]
    fn induced_map_on_branch_values() {
        let a = IntMatrix2::lattes_example();
        assert_eq!(induced_apply(&a, &s(0, 1, 2)), s(1, 1, 2));
        assert_eq!(induced_apply(&a, &s(1, 0, 2)), s(0, 0, 1));
    }

    #[test]
    fn critical_points_of_example() {
        let a = IntMatrix2::lattes_example();
        let crit = critical_points_f(&a).unwrap();
        assert_eq!(
            crit.iter().cloned().collect::<Vec<_>>(),
            vec![s(1, 0, 4), s(1, 2, 4)]
        );
        let values: BTreeSet<_> = crit.iter().map(|c| induced_apply(&a, c)).collect();
        assert_eq!(
            values.into_iter().collect::<Vec<_>>(),
            vec![s(0, 1, 2), s(1, 0, 2)]
        );
        for c in &crit {
            assert_eq!(sphere_preimages(&a, &induced_apply(&a, c)).len(), 1);
        }
        assert!(matches!(
            critical_points_f(&IntMatrix2::new(3, 0, 0, 1)),
            Err(Error::UnsupportedDegree(_))
        ));
    }

    #[test]
    fn lattes_report_for_example() {
        let report = verify_lattes(&IntMatrix2::lattes_example()).unwrap();
        assert!(report.all_pass(), "{report}");
        assert!(report.totally_invariant_point.is_none());
        let cycles: Vec<_> = report
            .postcritical
            .iter()
            .map(|o| (o.points.clone(), o.cycle_start))
            .collect();
        assert!(cycles.contains(&(vec![s(0, 1, 2), s(1, 1, 2)], 1)));
        assert!(cycles.contains(&(vec![s(1, 0, 2), s(0, 0, 1)], 1)));
        assert_eq!(
            report.branch_orbit(),
            vec![
                (s(0, 0, 1), s(0, 0, 1)),
                (s(1, 0, 2), s(0, 0, 1)),
                (s(0, 1, 2), s(1, 1, 2)),
                (s(1, 1, 2), s(1, 1, 2)),
            ]
        );
    }

    #[test]
    fn verify_rejects_non_hyperbolic() {
        assert!(matches!(
            verify_lattes(&IntMatrix2::new(2, 0, 0, 1)),
            Err(Error::NotHyperbolic(_))
        ));
    }

    #[test]
    fn homology_hyperbolic_examples() {
        assert!(homology_hyperbolic(&IntMatrix2::lattes_example()));
        assert!(!homology_hyperbolic(&IntMatrix2::new(2, 0, 0, 1)));
        assert!(!homology_hyperbolic(&IntMatrix2::new(0, -1, 1, 0)));
        assert!(homology_hyperbolic(&IntMatrix2::new(1, -1, 1, 1)));
    }

    #[test]
    fn census_small_n() {
        let a = IntMatrix2::lattes_example();
        let c1 = periodic_census(&a, 1).unwrap();
        assert_eq!((c1.sphere_count, c1.torus_count), (5, 8));
        assert_eq!(c1.csv_row(), format!("1,-2,8,8,5,{}", 5f64.ln()));
        assert_eq!(sphere_fixed_count(&a, 2).unwrap(), 21);
        assert_eq!(c1.sphere_points().len(), 5);
    }

    #[test]
    fn numeric_canonical_form() {
        let x = Vector2::new(0.3, -0.25);
        let a = SpherePointF::project(x);
        let b = SpherePointF::project(-x);
        assert_eq!(a, b);
        assert_eq!(a.rep(), Vector2::new(0.3, 0.75));
        assert_eq!(SpherePointF::new(-1e-20, 0.5).rep(), Vector2::new(0.0, 0.5));
        let d = SpherePointF::new(0.1, 0.1).distance(&SpherePointF::new(0.95, 0.95));
        assert!((d - (0.05f64 * 0.05 * 2.0).sqrt()).abs() < 1e-12);
    }
}
