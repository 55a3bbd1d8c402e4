//! Growing invariant curves through a saddle of `F` and measuring how densely
//! they fill a sample of `K`.
//!
//! A leaf is stored as a polyline in the lift `R²`, so consecutive vertices
//! are genuinely close rather than close modulo the lattice. Each generation
//! maps every vertex (forward by `G` for unstable leaves, back along the
//! continuous branch of `G⁻¹` for stable ones) and then subdivides any gap
//! wider than `δ` by mapping midpoints of the previous generation.

use nalgebra::Vector2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pillowcase::{reduce_mod1, SpherePointF};
use crate::surgery::{eigenvalues, PerturbedMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeafKind {
    /// Grown by forward iteration along the expanding direction.
    Unstable,
    /// Grown by backward iteration along the contracting direction.
    Stable,
}

impl LeafKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LeafKind::Unstable => "unstable",
            LeafKind::Stable => "stable",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceOptions {
    /// Largest allowed distance between consecutive vertices.
    pub delta: f64,
    /// Half-length of the seed segment.
    pub seed_radius: f64,
    pub point_budget: usize,
    pub max_generations: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            delta: 1e-3,
            seed_radius: 1e-4,
            point_budget: 4_000_000,
            max_generations: 200,
        }
    }
}

/// A polyline in the lift, trimmed to an arc-length window around the seed.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafTrace {
    pub kind: LeafKind,
    pub points: Vec<Vector2<f64>>,
    /// Index of the vertex at the seed point.
    pub anchor: usize,
    pub generations: usize,
}

impl LeafTrace {
    pub fn arc_length(&self) -> f64 {
        polyline_length(&self.points)
    }

    pub fn max_gap(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0, f64::max)
    }

    pub fn sphere_points(&self) -> Vec<SpherePointF> {
        self.points
            .iter()
            .map(|&x| SpherePointF::project(x))
            .collect()
    }

    /// A trace made of the given points, in order.
    pub fn from_points(kind: LeafKind, points: Vec<Vector2<f64>>) -> Self {
        LeafTrace {
            kind,
            points,
            anchor: 0,
            generations: 0,
        }
    }
}

fn polyline_length(points: &[Vector2<f64>]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

pub fn trace_unstable_leaf(
    p: &PerturbedMap,
    start: Vector2<f64>,
    target_length: f64,
) -> Result<LeafTrace> {
    trace_leaf(
        p,
        start,
        LeafKind::Unstable,
        target_length,
        &TraceOptions::default(),
    )
}

pub fn trace_stable_leaf(
    p: &PerturbedMap,
    start: Vector2<f64>,
    target_length: f64,
) -> Result<LeafTrace> {
    trace_leaf(
        p,
        start,
        LeafKind::Stable,
        target_length,
        &TraceOptions::default(),
    )
}

/// Grows the leaf of the given kind through `start` (a lift of a fixed point
/// of `F`) until its arc length reaches `target_length`, then trims it to a
/// window of that length around `start`.
pub fn trace_leaf(
    p: &PerturbedMap,
    start: Vector2<f64>,
    kind: LeafKind,
    target_length: f64,
    opts: &TraceOptions,
) -> Result<LeafTrace> {
    if [target_length, opts.delta, opts.seed_radius]
        .iter()
        .any(|v| v.is_nan() || *v <= 0.0)
    {
        return Err(Error::Input(format!(
            "leaf tracing needs positive length, delta and seed radius (got {target_length}, {}, {})",
            opts.delta, opts.seed_radius
        )));
    }
    let dir = seed_direction(p, start, kind)?;
    let n0 = 2 * ((opts.seed_radius / opts.delta).ceil() as usize).max(1);
    let mut points: Vec<Vector2<f64>> = (0..=n0)
        .map(|i| start + dir * (opts.seed_radius * (2.0 * i as f64 / n0 as f64 - 1.0)))
        .collect();
    let mut anchor = n0 / 2;
    let mut best_length = polyline_length(&points);
    let mut stalled = 0;

    for generation in 0..=opts.max_generations {
        let length = polyline_length(&points);
        if length >= target_length {
            let (lo, hi) = trim_window(&points, anchor, target_length);
            return Ok(LeafTrace {
                kind,
                points: points[lo..=hi].to_vec(),
                anchor: anchor - lo,
                generations: generation,
            });
        }
        if generation == opts.max_generations {
            break;
        }
        if length > best_length * (1.0 + 1e-9) {
            best_length = length;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 3 {
                return Err(Error::SegmentCollapse(format!(
                    "arc length stuck at {length:.3e} after {generation} generations"
                )));
            }
        }
        let (next, next_anchor) = match kind {
            LeafKind::Unstable => forward_generation(p, &points, anchor, opts)?,
            LeafKind::Stable => backward_generation(p, &points, anchor, opts)?,
        };
        points = next;
        anchor = next_anchor;
        if points.len() > opts.point_budget {
            return Err(Error::SegmentCollapse(format!(
                "{} vertices exceed the budget of {}",
                points.len(),
                opts.point_budget
            )));
        }
        // Keep the lift near the origin; the integer shift does not change the curve on the torus.
        let shift = points[anchor].map(f64::floor);
        if shift != Vector2::zeros() {
            for x in &mut points {
                *x -= shift;
            }
        }
    }
    Err(Error::SegmentCollapse(format!(
        "arc length {:.3e} below target {target_length} after {} generations",
        polyline_length(&points),
        opts.max_generations
    )))
}

fn seed_direction(p: &PerturbedMap, start: Vector2<f64>, kind: LeafKind) -> Result<Vector2<f64>> {
    let j = p.jacobian(start, 1e-7);
    let ev = eigenvalues(&j);
    let lambda = match kind {
        LeafKind::Unstable => ev[0],
        LeafKind::Stable => ev[1],
    };
    if lambda.im.abs() > 1e-12 || ev[0].norm() <= 1.0 || ev[1].norm() >= 1.0 {
        return Err(Error::SegmentCollapse(format!(
            "seed point {start:?} is not a saddle (multipliers {:.4}, {:.4})",
            ev[0], ev[1]
        )));
    }
    // Kernel of J − λI.
    let m = j - nalgebra::Matrix2::identity() * lambda.re;
    let v = if m.row(0).norm() >= m.row(1).norm() {
        Vector2::new(-m[(0, 1)], m[(0, 0)])
    } else {
        Vector2::new(-m[(1, 1)], m[(1, 0)])
    };
    Ok(v.normalize())
}

/// Smallest index window around `anchor` with arc length at least `target`,
/// grown alternately on both sides.
fn trim_window(points: &[Vector2<f64>], anchor: usize, target: f64) -> (usize, usize) {
    let (mut lo, mut hi) = (anchor, anchor);
    let mut length = 0.0;
    let mut left = true;
    while length < target && (lo > 0 || hi + 1 < points.len()) {
        if (left && lo > 0) || hi + 1 == points.len() {
            length += (points[lo] - points[lo - 1]).norm();
            lo -= 1;
        } else {
            length += (points[hi + 1] - points[hi]).norm();
            hi += 1;
        }
        left = !left;
    }
    (lo, hi)
}

/// Maps each old segment and inserts images of midpoints until the new gaps
/// are at most `delta`. `map(old, new_neighbour)` maps a point of the old
/// curve given the image of an adjacent vertex.
fn subdivide<M>(
    old: &[Vector2<f64>],
    new: &[Vector2<f64>],
    anchor: usize,
    delta: f64,
    map: M,
) -> Result<(Vec<Vector2<f64>>, usize)>
where
    M: Fn(Vector2<f64>, Vector2<f64>) -> Result<Vector2<f64>> + Sync,
{
    let inserted: Vec<Vec<Vector2<f64>>> = (0..old.len().saturating_sub(1))
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            refine_segment(
                old[i],
                old[i + 1],
                new[i],
                new[i + 1],
                delta,
                0,
                &map,
                &mut out,
            )?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(new.len() + inserted.iter().map(Vec::len).sum::<usize>());
    let mut new_anchor = 0;
    for (i, &x) in new.iter().enumerate() {
        if i == anchor {
            new_anchor = points.len();
        }
        points.push(x);
        if let Some(extra) = inserted.get(i) {
            points.extend_from_slice(extra);
        }
    }
    Ok((points, new_anchor))
}

const MAX_SUBDIVISION_DEPTH: usize = 48;

#[allow(clippy::too_many_arguments)]
fn refine_segment<M>(
    a: Vector2<f64>,
    b: Vector2<f64>,
    fa: Vector2<f64>,
    fb: Vector2<f64>,
    delta: f64,
    depth: usize,
    map: &M,
    out: &mut Vec<Vector2<f64>>,
) -> Result<()>
where
    M: Fn(Vector2<f64>, Vector2<f64>) -> Result<Vector2<f64>>,
{
    if (fb - fa).norm() <= delta {
        return Ok(());
    }
    if depth == MAX_SUBDIVISION_DEPTH {
        return Err(Error::SegmentCollapse(format!(
            "gap {:.3e} survives {MAX_SUBDIVISION_DEPTH} subdivisions near {fa:?}",
            (fb - fa).norm()
        )));
    }
    let m = 0.5 * (a + b);
    let fm = map(m, fa)?;
    refine_segment(a, m, fa, fm, delta, depth + 1, map, out)?;
    out.push(fm);
    refine_segment(m, b, fm, fb, delta, depth + 1, map, out)
}

fn forward_generation(
    p: &PerturbedMap,
    points: &[Vector2<f64>],
    anchor: usize,
    opts: &TraceOptions,
) -> Result<(Vec<Vector2<f64>>, usize)> {
    let mapped: Vec<Vector2<f64>> = points.par_iter().map(|&x| p.lift_apply(x)).collect();
    subdivide(points, &mapped, anchor, opts.delta, |x, _| {
        Ok(p.lift_apply(x))
    })
}

/// The lift of a preimage of `x` closest to `hint`.
fn pull_back(p: &PerturbedMap, x: Vector2<f64>, hint: Vector2<f64>) -> Result<Vector2<f64>> {
    let mut best: Option<(f64, Vector2<f64>)> = None;
    for branch in p.preimages_perturbed(&SpherePointF::project(x)) {
        let lift = branch?.lift;
        for cand in [lift, -lift] {
            let shifted = cand + (hint - cand).map(f64::round);
            let d = (shifted - hint).norm();
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, shifted));
            }
        }
    }
    best.map(|(_, x)| x)
        .ok_or_else(|| Error::SegmentCollapse("point has no preimages".into()))
}

fn backward_generation(
    p: &PerturbedMap,
    points: &[Vector2<f64>],
    anchor: usize,
    opts: &TraceOptions,
) -> Result<(Vec<Vector2<f64>>, usize)> {
    // Each vertex picks the preimage lift continuing its neighbour towards the
    // anchor, so the new curve is continuous in the lift.
    let mut mapped = vec![Vector2::zeros(); points.len()];
    mapped[anchor] = pull_back(p, points[anchor], points[anchor])?;
    for i in anchor + 1..points.len() {
        mapped[i] = pull_back(p, points[i], mapped[i - 1])?;
    }
    for i in (0..anchor).rev() {
        mapped[i] = pull_back(p, points[i], mapped[i + 1])?;
    }
    subdivide(points, &mapped, anchor, opts.delta, |x, hint| {
        pull_back(p, x, hint)
    })
}

/// Fraction of `kset` within `eps` (sphere metric) of the polyline.
pub fn density_statistic(trace: &LeafTrace, kset: &[SpherePointF], eps: f64) -> f64 {
    if kset.is_empty() || trace.points.is_empty() {
        return 0.0;
    }
    let index = SegmentIndex::new(&trace.points, eps);
    let hits = kset.par_iter().filter(|k| index.within(k, eps)).count();
    hits as f64 / kset.len() as f64
}

/// Bucket grid over `[0,1)²` holding each segment (and its negative) by the
/// reduced midpoint.
struct SegmentIndex<'a> {
    points: &'a [Vector2<f64>],
    cells: usize,
    /// Bucket offsets to visit, nearest first.
    offsets: Vec<(isize, isize)>,
    buckets: Vec<Vec<(u32, bool)>>,
}

impl<'a> SegmentIndex<'a> {
    fn new(points: &'a [Vector2<f64>], eps: f64) -> Self {
        let cells = ((1.0 / eps).floor() as usize).clamp(1, 1024);
        let mut buckets = vec![Vec::new(); cells * cells];
        let mut longest: f64 = 0.0;
        let segments = points.len().saturating_sub(1).max(points.len().min(1));
        for i in 0..segments {
            let (a, b) = (points[i], points[(i + 1).min(points.len() - 1)]);
            longest = longest.max((b - a).norm());
            let mid = 0.5 * (a + b);
            for negated in [false, true] {
                let m = if negated { -mid } else { mid };
                buckets[bucket(reduce_mod1(m), cells)].push((i as u32, negated));
            }
        }
        let n = cells as isize;
        let reach = ((eps + 0.5 * longest) * cells as f64).ceil() as isize;
        // Once the reach spans the torus, every bucket is visited exactly once.
        let range = if 2 * reach + 1 >= n {
            -(n / 2)..=(n - 1 - n / 2)
        } else {
            -reach..=reach
        };
        let mut offsets: Vec<(isize, isize)> = range
            .clone()
            .flat_map(|di| range.clone().map(move |dj| (di, dj)))
            .collect();
        offsets.sort_by_key(|&(di, dj)| di.abs().max(dj.abs()));
        SegmentIndex {
            points,
            cells,
            offsets,
            buckets,
        }
    }

    fn within(&self, k: &SpherePointF, eps: f64) -> bool {
        let q = k.rep();
        let n = self.cells as isize;
        let ci = ((q.x * n as f64) as isize).min(n - 1);
        let cj = ((q.y * n as f64) as isize).min(n - 1);
        // Nearest cells first: most hits are found immediately.
        for &(di, dj) in &self.offsets {
            let bi = (ci + di).rem_euclid(n) as usize;
            let bj = (cj + dj).rem_euclid(n) as usize;
            for &(i, negated) in &self.buckets[bj * self.cells + bi] {
                let i = i as usize;
                let (mut a, mut b) = (
                    self.points[i],
                    self.points[(i + 1).min(self.points.len() - 1)],
                );
                if negated {
                    a = -a;
                    b = -b;
                }
                let shift = (q - 0.5 * (a + b)).map(f64::round);
                if segment_distance(q, a + shift, b + shift) <= eps {
                    return true;
                }
            }
        }
        false
    }
}

fn bucket(x: Vector2<f64>, cells: usize) -> usize {
    let c = |v: f64| ((v * cells as f64) as usize).min(cells - 1);
    c(x.y) * cells + c(x.x)
}

fn segment_distance(q: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((q - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (q - (a + ab * t)).norm()
}

/// Fraction of trace vertices within `eps` of some point of `kset`.
pub fn fraction_near(trace: &LeafTrace, kset: &[SpherePointF], eps: f64) -> f64 {
    if trace.points.is_empty() {
        return 0.0;
    }
    let index = crate::repeller::SphereIndex::new(kset, eps);
    let hits = trace
        .points
        .par_iter()
        .filter(|&&x| {
            index
                .nearest_within(&SpherePointF::project(x), eps)
                .is_some()
        })
        .count();
    hits as f64 / trace.points.len() as f64
}
