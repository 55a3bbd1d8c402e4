use lattes_da::leaf::{
    density_statistic, fraction_near, trace_leaf, LeafKind, LeafTrace, TraceOptions,
};
use lattes_da::pillowcase::SpherePointF;
use lattes_da::repeller::{compute_basins, k_candidate_points};
use lattes_da::surgery::PerturbedMap;
use lattes_da::Error;
use nalgebra::Vector2;

fn setup() -> (PerturbedMap, Vector2<f64>) {
    let p = PerturbedMap::lattes_default();
    let s = p.find_saddles().unwrap().saddles[0].lift;
    (p, s)
}

fn segment_distance(q: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let ab = b - a;
    let t = if ab.norm_squared() > 0.0 {
        ((q - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (q - (a + ab * t)).norm()
}

/// Sphere distance from `k` to the projected polyline, by scanning every
/// segment against the nearest lift of `k` and of `-k`.
fn brute_distance(points: &[Vector2<f64>], k: Vector2<f64>) -> f64 {
    points
        .windows(2)
        .flat_map(|w| {
            let mid = (w[0] + w[1]) / 2.0;
            [k, -k].map(|s| {
                let shift = (mid - s).map(f64::round);
                segment_distance(s + shift, w[0], w[1])
            })
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn density_matches_brute_force() {
    let (p, s) = setup();
    let trace = trace_leaf(&p, s, LeafKind::Unstable, 3.0, &TraceOptions::default()).unwrap();
    let kset: Vec<SpherePointF> = (0..400)
        .map(|i| SpherePointF::new((i as f64 * 0.618) % 1.0, (i as f64 * 0.377) % 1.0))
        .collect();
    for eps in [0.01, 0.05] {
        let hits = kset
            .iter()
            .filter(|k| brute_distance(&trace.points, k.rep()) <= eps)
            .count();
        let expected = hits as f64 / kset.len() as f64;
        assert_eq!(density_statistic(&trace, &kset, eps), expected, "eps {eps}");
    }
}

#[test]
fn unstable_leaf_is_forward_invariant() {
    let (p, s) = setup();
    let trace = trace_leaf(&p, s, LeafKind::Unstable, 4.0, &TraceOptions::default()).unwrap();
    let a = trace.anchor;
    let inner = &trace.points[a.saturating_sub(300)..(a + 300).min(trace.points.len())];
    let attractors = p.attractors();
    for &x in inner.iter().step_by(10) {
        // The branch running into an attractor ends after finitely many
        // generations, so images past its last vertex are skipped.
        let y = SpherePointF::project(p.lift_apply(x));
        if attractors.iter().any(|a| a.distance(&y) < 0.01) {
            continue;
        }
        let d = trace
            .points
            .windows(2)
            .map(|w| segment_distance(p.lift_apply(x), w[0], w[1]))
            .fold(f64::INFINITY, f64::min);
        assert!(d < 1e-5, "image of {x:?} is {d} from the leaf");
    }
}

#[test]
fn stable_leaf_is_forward_invariant() {
    let (p, s) = setup();
    let trace = trace_leaf(&p, s, LeafKind::Stable, 2.0, &TraceOptions::default()).unwrap();
    for &x in trace.points.iter().step_by(50) {
        let d = trace
            .points
            .windows(2)
            .map(|w| segment_distance(p.lift_apply(x), w[0], w[1]))
            .fold(f64::INFINITY, f64::min);
        assert!(d < 1e-5, "image of {x:?} is {d} from the leaf");
    }
}

#[test]
fn trace_respects_length_and_spacing() {
    let (p, s) = setup();
    for kind in [LeafKind::Unstable, LeafKind::Stable] {
        let trace = trace_leaf(&p, s, kind, 5.0, &TraceOptions::default()).unwrap();
        assert!(
            trace.arc_length() >= 5.0 - 1e-3 && trace.arc_length() <= 5.0 + 2e-3,
            "{}",
            trace.arc_length()
        );
        assert!(trace.max_gap() <= 1e-3 + 1e-12);
        assert!((trace.points[trace.anchor] - s).norm() < 1e-9);
    }
}

#[test]
fn unstable_leaf_stays_near_candidates() {
    let (p, s) = setup();
    let grid = compute_basins(&p, 512, 512, 5000, 1e-3).unwrap();
    let kset = k_candidate_points(&grid);
    let trace = trace_leaf(&p, s, LeafKind::Unstable, 10.0, &TraceOptions::default()).unwrap();
    assert!(fraction_near(&trace, &kset, 3.0 / 512.0) >= 0.95);
}

#[test]
fn longer_leaves_are_at_least_as_dense() {
    let (p, s) = setup();
    let grid = compute_basins(&p, 64, 64, 5000, 1e-3).unwrap();
    let kset = k_candidate_points(&grid);
    let d: Vec<f64> = [5.0, 10.0, 20.0]
        .iter()
        .map(|&l| {
            density_statistic(
                &trace_leaf(&p, s, LeafKind::Unstable, l, &TraceOptions::default()).unwrap(),
                &kset,
                0.05,
            )
        })
        .collect();
    assert!(d.windows(2).all(|w| w[1] >= w[0]), "{d:?}");
}

#[test]
fn attractor_seed_is_rejected() {
    let p = PerturbedMap::lattes_default();
    let err = trace_leaf(
        &p,
        Vector2::zeros(),
        LeafKind::Unstable,
        1.0,
        &TraceOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::SegmentCollapse(_)), "{err:?}");
}

#[test]
fn degenerate_inputs() {
    let (p, s) = setup();
    assert!(matches!(
        trace_leaf(&p, s, LeafKind::Unstable, 0.0, &TraceOptions::default()),
        Err(Error::Input(_))
    ));
    let empty = LeafTrace::from_points(LeafKind::Unstable, vec![]);
    assert_eq!(
        density_statistic(&empty, &[SpherePointF::new(0.1, 0.2)], 0.05),
        0.0
    );
    let line = LeafTrace::from_points(
        LeafKind::Unstable,
        vec![Vector2::new(0.1, 0.1), Vector2::new(0.2, 0.1)],
    );
    assert_eq!(density_statistic(&line, &[], 0.05), 0.0);
}

#[test]
fn polyline_through_the_sample_has_full_density() {
    let (p, _) = setup();
    let grid = compute_basins(&p, 32, 32, 5000, 1e-3).unwrap();
    let kset = k_candidate_points(&grid);
    let trace = LeafTrace::from_points(LeafKind::Unstable, kset.iter().map(|k| k.rep()).collect());
    assert_eq!(density_statistic(&trace, &kset, 1e-9), 1.0);
}
