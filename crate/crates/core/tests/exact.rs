//! Exact torus and sphere combinatorics against grid enumeration.

mod common;

use std::collections::BTreeSet;

use common::*;
use lattes_da::lattice::{
    enumerate_congruence, preimages, solve_congruence, RationalTorusPoint, Sign,
};
use lattes_da::pillowcase::{critical_points_f, periodic_census, verify_lattes, PeriodicCensus};
use lattes_da::Error;

fn lib_set(points: &BTreeSet<RationalTorusPoint>) -> BTreeSet<(i64, i64, i64)> {
    points.iter().map(from_lib).collect()
}

#[test]
fn smith_solutions_match_enumeration() {
    for m in std::iter::once(A).chain(OTHERS) {
        for n in 1..=3 {
            for (sign, s) in [(Sign::Plus, 1), (Sign::Minus, -1)] {
                let snf = lib_set(&solve_congruence(&int_matrix(m), n, sign).unwrap());
                let oracle = brute_congruence(m, n, s);
                assert_eq!(snf, oracle, "{m:?} n={n} sign={s}");
                assert_eq!(snf.len() as i64, {
                    let p = mat_pow(m, n);
                    det([[p[0][0] - s, p[0][1]], [p[1][0], p[1][1] - s]]).abs()
                });
                let grid = lib_set(&enumerate_congruence(&int_matrix(m), n, sign).unwrap());
                assert_eq!(grid, oracle);
            }
        }
    }
}

#[test]
fn census_of_example() {
    assert_eq!(brute_sphere_fixed_count(A, 1), 5);
    assert_eq!(brute_sphere_fixed_count(A, 2), 21);
    let m = int_matrix(A);
    for n in 1..=3 {
        let c = periodic_census(&m, n).unwrap();
        assert_eq!(c.sphere_count, brute_sphere_fixed_count(A, n), "n={n}");
        assert_eq!(c.sphere_points().len(), c.sphere_count);
    }
    let c1 = periodic_census(&m, 1).unwrap();
    assert_eq!(
        (c1.det_minus.clone(), c1.det_plus.clone()),
        (BigIntish::from(-2), BigIntish::from(8))
    );
    let c2 = periodic_census(&m, 2).unwrap();
    assert_eq!(
        (c2.det_minus.clone(), c2.det_plus.clone()),
        (BigIntish::from(-16), BigIntish::from(26))
    );
    assert_eq!(
        c1.csv_row().split(',').take(5).collect::<Vec<_>>(),
        ["1", "-2", "8", "8", "5"]
    );
    assert_eq!(PeriodicCensus::CSV_HEADER.split(',').count(), 6);
}

type BigIntish = num_bigint::BigInt;

#[test]
fn census_of_other_matrices() {
    for m in OTHERS {
        for n in 1..=3 {
            let c = periodic_census(&int_matrix(m), n).unwrap();
            assert_eq!(
                c.sphere_count,
                brute_sphere_fixed_count(m, n),
                "{m:?} n={n}"
            );
        }
    }
}

#[test]
fn growth_rate_at_least_log_degree() {
    for n in 1..=6 {
        let c = periodic_census(&int_matrix(A), n).unwrap();
        assert!(c.log_rate() >= 2f64.ln() - 1e-9, "n={n}: {}", c.log_rate());
    }
}

#[test]
fn degenerate_congruence_is_reported() {
    let id = int_matrix([[1, 0], [0, 1]]);
    assert!(matches!(
        solve_congruence(&id, 1, Sign::Plus),
        Err(Error::DegenerateCongruence { n: 1, sign: '-' })
    ));
    let swap = int_matrix([[0, 1], [1, 0]]);
    assert!(matches!(
        periodic_census(&swap, 2),
        Err(Error::DegenerateCongruence { .. })
    ));
}

#[test]
fn preimages_match_enumeration() {
    for m in std::iter::once(A).chain(OTHERS) {
        for (a, b, q) in [(0, 0, 1), (1, 2, 3), (1, 0, 2), (3, 5, 7), (1, 1, 4)] {
            let y = RationalTorusPoint::from_i64(a, b, q);
            let lib = lib_set(&preimages(&int_matrix(m), &y));
            assert_eq!(
                lib,
                brute_preimages(m, reduced(a, b, q)),
                "{m:?} y=({a},{b})/{q}"
            );
            assert_eq!(lib.len() as i64, det(m).abs());
        }
    }
}

#[test]
fn critical_points_match_enumeration() {
    for m in std::iter::once(A).chain(OTHERS) {
        let lib: BTreeSet<_> = critical_points_f(&int_matrix(m))
            .unwrap()
            .iter()
            .map(|s| from_lib(s.rep()))
            .collect();
        assert_eq!(lib, brute_critical_points(m, 8), "{m:?}");
        assert_eq!(lib.len(), 2);
    }
}

#[test]
fn example_critical_structure() {
    let expected: BTreeSet<_> = [(1, 0, 4), (1, 2, 4)].into_iter().collect();
    assert_eq!(brute_critical_points(A, 8), expected);
    let report = verify_lattes(&int_matrix(A)).unwrap();
    assert!(report.all_pass());
    let values: BTreeSet<_> = report
        .crit_values_f
        .iter()
        .map(|s| from_lib(s.rep()))
        .collect();
    assert_eq!(values, [(0, 1, 2), (1, 0, 2)].into_iter().collect());
    assert!(report.totally_invariant_point.is_none());
}

#[test]
fn lemma_suite_on_other_matrices() {
    for m in OTHERS {
        let report = verify_lattes(&int_matrix(m)).unwrap();
        assert!(
            report.ram && report.crit && report.inv && report.nonperiodic,
            "{m:?}\n{report}"
        );
    }
}

#[test]
fn verify_rejects_unsupported_matrices() {
    assert!(matches!(
        verify_lattes(&int_matrix([[2, 0], [0, 1]])),
        Err(Error::NotHyperbolic(_))
    ));
    assert!(matches!(
        verify_lattes(&int_matrix([[2, 1], [1, 1]])),
        Err(Error::UnsupportedDegree(_))
    ));
    // Eigenvalues 1 ± i have modulus √2: a valid (expanding) Lattès map, but
    // without the saddle splitting the surgery needs.
    let expanding = int_matrix([[1, -1], [1, 1]]);
    assert!(verify_lattes(&expanding).unwrap().all_pass());
    assert!(matches!(
        lattes_da::lattice::eigenframe(&expanding),
        Err(Error::NotHyperbolic(_))
    ));
}
