//! Basins of the two attractors of `F` and the repeller `K` they leave behind.
//!
//! The raster samples pixel centers of the full square `[0,1)²`, so every
//! sphere point appears twice (once per lift) and the two copies must agree.
//! `K` has no interior, so a single pixel-center orbit almost never stays
//! uncaptured in floating point; instead a pixel whose classification differs
//! from a neighbour's is taken to straddle `K`. Individual points of `K` can be
//! pinned down further by bisecting between differently captured centers.

use std::fs;
use std::path::Path;

use nalgebra::Vector2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pillowcase::{reduce_mod1, SpherePointF};
use crate::surgery::PerturbedMap;

/// Per-pixel classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasinLabel {
    /// Captured by the attractor `π(0,0)`.
    B1,
    /// Captured by the attractor `π(1/2,1/2)`.
    B2,
    KCandidate,
    /// The orbit left the finite floats.
    Undecided,
}

impl BasinLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BasinLabel::B1 => "B1",
            BasinLabel::B2 => "B2",
            BasinLabel::KCandidate => "K_candidate",
            BasinLabel::Undecided => "undecided",
        }
    }

    fn from_attractor(i: usize) -> Self {
        if i == 0 {
            BasinLabel::B1
        } else {
            BasinLabel::B2
        }
    }

    pub fn is_basin(self) -> bool {
        matches!(self, BasinLabel::B1 | BasinLabel::B2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classification {
    pub label: BasinLabel,
    /// Step at which the orbit entered an attractor ball, or `max_iter`.
    pub iterations: u32,
}

/// Iterates `F` from `x` until it lands within `eps_attract` of an attractor.
pub fn classify_point(
    x: &SpherePointF,
    p: &PerturbedMap,
    max_iter: u32,
    eps_attract: f64,
) -> Classification {
    classify_against(x, p, &p.attractors(), max_iter, eps_attract)
}

fn classify_against(
    x: &SpherePointF,
    p: &PerturbedMap,
    attractors: &[SpherePointF],
    max_iter: u32,
    eps_attract: f64,
) -> Classification {
    let mut s = *x;
    for it in 0..=max_iter {
        if !s.is_finite() {
            return Classification {
                label: BasinLabel::Undecided,
                iterations: it,
            };
        }
        if let Some(i) = attractors.iter().position(|a| a.distance(&s) < eps_attract) {
            return Classification {
                label: BasinLabel::from_attractor(i),
                iterations: it,
            };
        }
        if it < max_iter {
            s = p.sphere_apply(&s);
        }
    }
    Classification {
        label: BasinLabel::KCandidate,
        iterations: max_iter,
    }
}

/// Checks that `F` maps the circle of radius `eps` around each attractor
/// strictly inside it, at `samples` evenly spaced boundary points.
pub fn verify_trapping_balls(p: &PerturbedMap, eps: f64, samples: usize) -> Result<()> {
    for &c in p.centers() {
        let center = SpherePointF::project(c);
        for k in 0..samples {
            let theta = std::f64::consts::TAU * k as f64 / samples as f64;
            let x = c + Vector2::new(theta.cos(), theta.sin()) * eps;
            let y = p.sphere_apply(&SpherePointF::project(x));
            if center.distance(&y) >= eps || !y.is_finite() {
                return Err(Error::TrappingBall {
                    center: [c.x, c.y],
                    eps,
                });
            }
        }
    }
    Ok(())
}

/// Classification of every pixel center of a `width × height` grid over `[0,1)²`.
///
/// Row 0 is the top row (largest `x2`).
#[derive(Clone, Debug, PartialEq)]
pub struct RasterGrid {
    width: usize,
    height: usize,
    /// Classification of each pixel center.
    centers: Vec<Classification>,
    /// Final labels: a basin pixel becomes `K_candidate` when a 4-neighbour
    /// (wrapping around the torus) carries a different center label.
    cells: Vec<BasinLabel>,
}

/// Number of pixels per label.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LabelCounts {
    pub b1: usize,
    pub b2: usize,
    pub k_candidate: usize,
    pub undecided: usize,
}

impl LabelCounts {
    pub fn total(&self) -> usize {
        self.b1 + self.b2 + self.k_candidate + self.undecided
    }
}

impl RasterGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_center(&self, col: usize, row: usize) -> Vector2<f64> {
        pixel_center(self.width, self.height, col, row)
    }

    pub fn cell(&self, col: usize, row: usize) -> BasinLabel {
        self.cells[row * self.width + col]
    }

    pub fn cells(&self) -> &[BasinLabel] {
        &self.cells
    }

    pub fn center(&self, col: usize, row: usize) -> Classification {
        self.centers[row * self.width + col]
    }

    pub fn counts(&self) -> LabelCounts {
        let mut c = LabelCounts::default();
        for l in &self.cells {
            match l {
                BasinLabel::B1 => c.b1 += 1,
                BasinLabel::B2 => c.b2 += 1,
                BasinLabel::KCandidate => c.k_candidate += 1,
                BasinLabel::Undecided => c.undecided += 1,
            }
        }
        c
    }

    /// Fraction of pixels whose label equals that of the pixel holding `−x`.
    pub fn symmetric_agreement(&self) -> f64 {
        let (w, h) = (self.width, self.height);
        let agree = (0..h)
            .flat_map(|row| (0..w).map(move |col| (col, row)))
            .filter(|&(col, row)| self.cell(col, row) == self.cell(w - 1 - col, h - 1 - row))
            .count();
        agree as f64 / (w * h) as f64
    }

    /// Pairs of 4-adjacent pixels (right and downward neighbours, wrapping)
    /// whose centers were captured by different attractors, as
    /// `(index, neighbour index, offset from the first center to the second)`.
    pub fn basin_interfaces(&self) -> Vec<(usize, usize, Vector2<f64>)> {
        let (w, h) = (self.width, self.height);
        let mut out = Vec::new();
        for row in 0..h {
            for col in 0..w {
                let i = row * w + col;
                let right = row * w + (col + 1) % w;
                let down = ((row + 1) % h) * w + col;
                for (j, offset) in [
                    (right, Vector2::new(1.0 / w as f64, 0.0)),
                    (down, Vector2::new(0.0, -1.0 / h as f64)),
                ] {
                    let (a, b) = (self.centers[i].label, self.centers[j].label);
                    if a.is_basin() && b.is_basin() && a != b {
                        out.push((i, j, offset));
                    }
                }
            }
        }
        out
    }
}

pub fn pixel_center(width: usize, height: usize, col: usize, row: usize) -> Vector2<f64> {
    Vector2::new(
        (col as f64 + 0.5) / width as f64,
        ((height - 1 - row) as f64 + 0.5) / height as f64,
    )
}

/// A lift of the pixel center chosen so that mirrored pixels get exactly
/// negated lifts: the upper half of each axis uses `−` the mirrored center.
/// Their sphere points then agree bit for bit at every raster size.
pub fn pixel_lift(width: usize, height: usize, col: usize, row: usize) -> Vector2<f64> {
    let axis = |n: usize, i: usize| {
        if 2 * i + 1 > n {
            -(((n - 1 - i) as f64 + 0.5) / n as f64)
        } else {
            (i as f64 + 0.5) / n as f64
        }
    };
    Vector2::new(axis(width, col), axis(height, height - 1 - row))
}

/// Default attractor-ball radius and iteration cap for basin computations.
pub const DEFAULT_MAX_ITER: u32 = 5000;
pub const DEFAULT_EPS_ATTRACT: f64 = 1e-3;

/// Classifies every pixel center, in parallel; the result does not depend on
/// the schedule.
pub fn compute_basins(
    p: &PerturbedMap,
    width: usize,
    height: usize,
    max_iter: u32,
    eps_attract: f64,
) -> Result<RasterGrid> {
    if width < 16 || height < 16 {
        return Err(Error::Input(format!(
            "raster must be at least 16x16, got {width}x{height}"
        )));
    }
    if max_iter == 0 || eps_attract.is_nan() || eps_attract <= 0.0 {
        return Err(Error::Input(format!(
            "need max_iter >= 1 and eps_attract > 0 (got {max_iter}, {eps_attract})"
        )));
    }
    if !p.attractors().is_empty() {
        verify_trapping_balls(p, eps_attract, 1000)?;
    }
    let attractors = p.attractors();
    let centers: Vec<Classification> = (0..width * height)
        .into_par_iter()
        .map(|i| {
            let x = pixel_lift(width, height, i % width, i / width);
            classify_against(
                &SpherePointF::project(x),
                p,
                &attractors,
                max_iter,
                eps_attract,
            )
        })
        .collect();

    let cells = (0..width * height)
        .map(|i| {
            let (col, row) = (i % width, i / width);
            let own = centers[i].label;
            if !own.is_basin() {
                return own;
            }
            let neighbours = [
                row * width + (col + 1) % width,
                row * width + (col + width - 1) % width,
                ((row + 1) % height) * width + col,
                ((row + height - 1) % height) * width + col,
            ];
            if neighbours.iter().any(|&j| centers[j].label != own) {
                BasinLabel::KCandidate
            } else {
                own
            }
        })
        .collect();

    Ok(RasterGrid {
        width,
        height,
        centers,
        cells,
    })
}

/// Centers of the pixels labelled `K_candidate`: the finite sample of `K`
/// used by the invariance and density checks.
pub fn k_candidate_points(grid: &RasterGrid) -> Vec<SpherePointF> {
    grid.cells
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == BasinLabel::KCandidate)
        .map(|(i, _)| SpherePointF::project(grid.pixel_center(i % grid.width, i / grid.width)))
        .collect()
}

/// A point located on `K` to within the bisection tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KSample {
    pub point: SpherePointF,
    /// Capture time of the last bisection probe, or `max_iter` if it was never captured.
    pub iterations: u32,
}

/// Bisection tolerance used to place samples on `K`.
pub const K_SAMPLE_TOL: f64 = 1e-12;

/// Pins down points of `K` between pixels: for up to `limit` basin interfaces
/// (evenly strided through the raster), bisects the segment between the two
/// centers captured by different attractors until it is shorter than `tol`.
pub fn refine_interfaces(
    p: &PerturbedMap,
    grid: &RasterGrid,
    max_iter: u32,
    eps_attract: f64,
    tol: f64,
    limit: usize,
) -> Vec<KSample> {
    let attractors = p.attractors();
    let interfaces = grid.basin_interfaces();
    let stride = interfaces.len().div_ceil(limit.max(1)).max(1);
    interfaces
        .par_iter()
        .step_by(stride)
        .map(|&(i, _, offset)| {
            let start = grid.pixel_center(i % grid.width, i / grid.width);
            let start_label = grid.centers[i].label;
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            let mut last = grid.centers[i];
            while (hi - lo) * offset.norm() > tol {
                let mid = 0.5 * (lo + hi);
                let x = SpherePointF::project(start + offset * mid);
                last = classify_against(&x, p, &attractors, max_iter, eps_attract);
                if last.label == start_label {
                    lo = mid;
                } else if last.label.is_basin() {
                    hi = mid;
                } else {
                    return KSample {
                        point: x,
                        iterations: last.iterations,
                    };
                }
            }
            KSample {
                point: SpherePointF::project(start + offset * (0.5 * (lo + hi))),
                iterations: last.iterations,
            }
        })
        .collect()
}

/// Uniform-grid bucket index for nearest-point queries in the sphere metric.
#[derive(Clone, Debug)]
pub struct SphereIndex {
    points: Vec<SpherePointF>,
    cells: usize,
    buckets: Vec<Vec<u32>>,
}

impl SphereIndex {
    /// Buckets have side at least `cell_size`.
    pub fn new(points: &[SpherePointF], cell_size: f64) -> Self {
        let cells = ((1.0 / cell_size).floor() as usize).clamp(1, 2048);
        let mut buckets = vec![Vec::new(); cells * cells];
        for (i, pt) in points.iter().enumerate() {
            for lift in [pt.rep(), reduce_mod1(-pt.rep())] {
                let b = bucket_of(lift, cells);
                if buckets[b].last() != Some(&(i as u32)) {
                    buckets[b].push(i as u32);
                }
            }
        }
        SphereIndex {
            points: points.to_vec(),
            cells,
            buckets,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance to the nearest indexed point, if one lies within `radius`.
    pub fn nearest_within(&self, q: &SpherePointF, radius: f64) -> Option<f64> {
        let reach = (radius * self.cells as f64).ceil() as isize;
        let reach = reach.min(self.cells as isize / 2);
        let rep = q.rep();
        let (ci, cj) = cell_coords(rep, self.cells);
        let n = self.cells as isize;
        let mut best: Option<f64> = None;
        for di in -reach..=reach {
            for dj in -reach..=reach {
                let bi = (ci as isize + di).rem_euclid(n) as usize;
                let bj = (cj as isize + dj).rem_euclid(n) as usize;
                for &k in &self.buckets[bj * self.cells + bi] {
                    let d = self.points[k as usize].distance(q);
                    if d <= radius && best.is_none_or(|b| d < b) {
                        best = Some(d);
                    }
                }
            }
        }
        best
    }
}

fn cell_coords(x: Vector2<f64>, cells: usize) -> (usize, usize) {
    let c = |v: f64| ((v * cells as f64) as usize).min(cells - 1);
    (c(x.x), c(x.y))
}

fn bucket_of(x: Vector2<f64>, cells: usize) -> usize {
    let (i, j) = cell_coords(x, cells);
    j * cells + i
}

/// A sample point that failed forward or backward invariance.
#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceViolation {
    pub point: SpherePointF,
    /// Distance from `F(k)` to the sample set, `None` if farther than `eps`.
    pub forward: Option<f64>,
    /// Same for each preimage branch.
    pub backward: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    pub eps: f64,
    pub samples: usize,
    pub forward_pass: usize,
    pub backward_pass: usize,
    pub violators: Vec<InvarianceViolation>,
}

impl InvarianceReport {
    pub fn forward_rate(&self) -> f64 {
        self.forward_pass as f64 / self.samples.max(1) as f64
    }

    pub fn backward_rate(&self) -> f64 {
        self.backward_pass as f64 / self.samples.max(1) as f64
    }

    /// Both directions pass for at least `threshold` of the samples.
    pub fn passes(&self, threshold: f64) -> bool {
        self.samples > 0 && self.forward_rate() >= threshold && self.backward_rate() >= threshold
    }
}

/// Complete-invariance test of a finite sample of `K`: for `samples` points
/// `k` drawn from `kset` (all of it when `samples ≥ |kset|`), `F(k)` and every
/// `F`-preimage of `k` must lie within `eps` of `kset`.
pub fn invariance_check(
    kset: &[SpherePointF],
    p: &PerturbedMap,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    invariance_check_against(kset, kset, p, eps, samples, seed)
}

/// As [`invariance_check`], drawing the tested points from `probes` and
/// measuring distances to `kset`.
pub fn invariance_check_against(
    probes: &[SpherePointF],
    kset: &[SpherePointF],
    p: &PerturbedMap,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    if kset.is_empty() || probes.is_empty() {
        return Err(Error::Input(
            "invariance check needs a nonempty K sample".into(),
        ));
    }
    let index = SphereIndex::new(kset, eps);
    let chosen: Vec<usize> = if samples >= probes.len() {
        (0..probes.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, probes.len(), samples).into_vec();
        idx.sort_unstable();
        idx
    };
    let outcomes: Vec<Result<(bool, bool, InvarianceViolation)>> = chosen
        .par_iter()
        .map(|&i| {
            let k = probes[i];
            let forward = index.nearest_within(&p.sphere_apply(&k), eps);
            let mut backward = Vec::new();
            for branch in p.preimages_perturbed(&k) {
                let pre = branch?;
                backward.push(index.nearest_within(&pre.point, eps));
            }
            let fwd_ok = forward.is_some();
            let back_ok = backward.iter().all(Option::is_some);
            Ok((
                fwd_ok,
                back_ok,
                InvarianceViolation {
                    point: k,
                    forward,
                    backward,
                },
            ))
        })
        .collect();
    let mut report = InvarianceReport {
        eps,
        samples: chosen.len(),
        forward_pass: 0,
        backward_pass: 0,
        violators: Vec::new(),
    };
    for outcome in outcomes {
        let (fwd, back, v) = outcome?;
        report.forward_pass += fwd as usize;
        report.backward_pass += back as usize;
        if !(fwd && back) {
            report.violators.push(v);
        }
    }
    Ok(report)
}

/// RGB colours for each label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Palette {
    pub b1: [u8; 3],
    pub b2: [u8; 3],
    pub k_candidate: [u8; 3],
    pub undecided: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            b1: [0, 90, 200],
            b2: [200, 60, 0],
            k_candidate: [0, 0, 0],
            undecided: [128, 128, 128],
        }
    }
}

impl Palette {
    pub fn color(&self, label: BasinLabel) -> [u8; 3] {
        match label {
            BasinLabel::B1 => self.b1,
            BasinLabel::B2 => self.b2,
            BasinLabel::KCandidate => self.k_candidate,
            BasinLabel::Undecided => self.undecided,
        }
    }
}

/// Binary PPM (`P6`) encoding of the raster, top row first.
pub fn ppm_bytes(grid: &RasterGrid, palette: &Palette) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", grid.width, grid.height);
    let mut out = Vec::with_capacity(header.len() + 3 * grid.cells.len());
    out.extend_from_slice(header.as_bytes());
    for &label in &grid.cells {
        out.extend_from_slice(&palette.color(label));
    }
    out
}

pub fn render_ppm(grid: &RasterGrid, palette: &Palette, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, ppm_bytes(grid, palette)).map_err(|e| Error::io(path, e))
}

pub const SAMPLE_CSV_HEADER: &str = "x1,x2,label,iterations_to_capture";

/// One row per pixel center.
pub fn write_raster_csv(grid: &RasterGrid, path: impl AsRef<Path>) -> Result<()> {
    let rows = (0..grid.height).flat_map(|row| {
        (0..grid.width).map(move |col| {
            let x = grid.pixel_center(col, row);
            let c = grid.center(col, row);
            format!(
                "{},{},{},{}",
                x.x,
                x.y,
                grid.cell(col, row).as_str(),
                c.iterations
            )
        })
    });
    write_lines(path.as_ref(), SAMPLE_CSV_HEADER, rows)
}

pub fn write_samples_csv(samples: &[KSample], path: impl AsRef<Path>) -> Result<()> {
    let rows = samples.iter().map(|s| {
        let x = s.point.rep();
        format!(
            "{},{},{},{}",
            x.x,
            x.y,
            BasinLabel::KCandidate.as_str(),
            s.iterations
        )
    });
    write_lines(path.as_ref(), SAMPLE_CSV_HEADER, rows)
}

pub(crate) fn write_lines(
    path: &Path,
    header: &str,
    rows: impl Iterator<Item = String>,
) -> Result<()> {
    let mut text = String::new();
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
