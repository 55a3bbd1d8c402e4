//! Derived-from-Anosov surgery on the Lattès map.
//!
//! The two fixed branch points of `f` are turned into attractors by damping
//! the unstable eigenvalue inside a small disc around each of them. The
//! perturbation is carried out on the lift `R² → R²`, at every translate of the
//! fixed 2-torsion points at once:
//!
//! ```text
//! G(x) = A·x − s·h(|x − c|²)·P_u(x − c),   s = λ_u − μ
//! ```
//!
//! where `c` is the nearest center, `h` is a C¹ bump supported in the disc of
//! radius `r`, and `P_u` projects onto `e_u` along `e_s`. The center set is
//! symmetric under `x ↦ −x` and the bump is radial, so `G(−x) = −G(x)` and `G`
//! descends to a map `F` of the sphere. On the unstable axis through a center
//! the map reads `u ↦ (λ_u − s·h(u²))·u`, so the created saddles sit where that
//! factor equals one.

use nalgebra::{Complex, Matrix2, Vector2};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{apply, eigenframe, EigenFrame, IntMatrix2, RationalTorusPoint};
use crate::pillowcase::{torus_distance, SpherePointF};

/// Largest support radius for which the discs around `Z²` and `(1/2,1/2)+Z²`
/// stay pairwise disjoint with room to spare.
pub const MAX_RADIUS: f64 = 0.3;

/// Bump parameters of the surgery.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurgeryProfile {
    r: f64,
    mu: f64,
}

impl SurgeryProfile {
    pub const DEFAULT_R: f64 = 0.2;
    pub const DEFAULT_MU: f64 = 0.5;

    /// `0 < mu < 1` and `0 ≤ r ≤ 0.3`; `r = 0` switches the surgery off.
    pub fn new(r: f64, mu: f64) -> Result<Self> {
        if !(r.is_finite() && (0.0..=MAX_RADIUS).contains(&r)) {
            return Err(Error::InvalidProfile(format!(
                "support radius r = {r} must lie in [0, {MAX_RADIUS}]"
            )));
        }
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::InvalidProfile(format!(
                "attracting multiplier mu = {mu} must lie in (0, 1)"
            )));
        }
        Ok(SurgeryProfile { r, mu })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn is_active(&self) -> bool {
        self.r > 0.0
    }
}

impl Default for SurgeryProfile {
    fn default() -> Self {
        SurgeryProfile {
            r: Self::DEFAULT_R,
            mu: Self::DEFAULT_MU,
        }
    }
}

/// `h(t) = (1 − t/r²)²` on `[0, r²]`, zero beyond.
pub fn bump(t: f64, r: f64) -> f64 {
    let r2 = r * r;
    if r2 <= 0.0 || t >= r2 {
        0.0
    } else {
        let w = 1.0 - t / r2;
        w * w
    }
}

/// `h'(t)`.
pub fn bump_derivative(t: f64, r: f64) -> f64 {
    let r2 = r * r;
    if r2 <= 0.0 || t >= r2 {
        0.0
    } else {
        -2.0 * (1.0 - t / r2) / r2
    }
}

/// Newton settings shared by the saddle and preimage solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 50,
            fd_step: 1e-7,
        }
    }
}

/// Outcome of a converged Newton solve.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonSolution {
    pub x: Vector2<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Central-difference Jacobian.
pub fn fd_jacobian(
    f: impl Fn(Vector2<f64>) -> Vector2<f64>,
    x: Vector2<f64>,
    h: f64,
) -> Matrix2<f64> {
    let ex = Vector2::new(h, 0.0);
    let ey = Vector2::new(0.0, h);
    let cx = (f(x + ex) - f(x - ex)) / (2.0 * h);
    let cy = (f(x + ey) - f(x - ey)) / (2.0 * h);
    Matrix2::from_columns(&[cx, cy])
}

/// Damped Newton iteration on `f(x) = 0` with finite-difference Jacobians.
pub fn newton(
    f: impl Fn(Vector2<f64>) -> Vector2<f64>,
    x0: Vector2<f64>,
    opts: &NewtonOptions,
) -> Result<NewtonSolution> {
    let mut x = x0;
    let mut res = f(x);
    let mut trace = vec![res.norm()];
    for it in 0..=opts.max_iter {
        let norm = res.norm();
        if norm < opts.tol {
            return Ok(NewtonSolution {
                x,
                residual: norm,
                iterations: it,
            });
        }
        if it == opts.max_iter || !norm.is_finite() {
            break;
        }
        let jac = fd_jacobian(&f, x, opts.fd_step);
        let Some(step) = jac.lu().solve(&(-res)) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn = x + step * t;
            let rn = f(xn);
            if rn.norm() < norm {
                accepted = Some((xn, rn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, rn)) = accepted else { break };
        x = xn;
        res = rn;
        trace.push(res.norm());
    }
    Err(Error::NewtonDiverged { residuals: trace })
}

/// Eigenvalues of a real 2×2 matrix, largest modulus first.
pub fn eigenvalues(m: &Matrix2<f64>) -> [Complex<f64>; 2] {
    let tr = m.trace();
    let det = m.determinant();
    let disc = tr * tr / 4.0 - det;
    let mut ev = if disc >= 0.0 {
        let r = disc.sqrt();
        [
            Complex::new(tr / 2.0 + r, 0.0),
            Complex::new(tr / 2.0 - r, 0.0),
        ]
    } else {
        let r = (-disc).sqrt();
        [Complex::new(tr / 2.0, r), Complex::new(tr / 2.0, -r)]
    };
    if ev[0].norm() < ev[1].norm() {
        ev.swap(0, 1);
    }
    ev
}

/// The surgered map `F` together with its equivariant lift `G`.
#[derive(Clone, Debug)]
pub struct PerturbedMap {
    matrix: IntMatrix2,
    linear: Matrix2<f64>,
    inverse: Matrix2<f64>,
    profile: SurgeryProfile,
    frame: EigenFrame,
    strength: f64,
    /// Fixed 2-torsion points, in `[0,1)²`; the surgery centers are their translates.
    centers: Vec<Vector2<f64>>,
    cosets: Vec<Vector2<f64>>,
}

impl PerturbedMap {
    pub fn new(matrix: IntMatrix2, profile: SurgeryProfile) -> Result<Self> {
        let frame = eigenframe(&matrix)?;
        if frame.lambda_u <= 1.0 {
            return Err(Error::InvalidProfile(format!(
                "unstable eigenvalue {} must be positive for the surgery",
                frame.lambda_u
            )));
        }
        let strength = frame.lambda_u - profile.mu;
        let ratio = (frame.lambda_u - 1.0) / strength;
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidProfile(format!(
                "(lambda_u - 1)/s = {ratio} must lie in (0, 1)"
            )));
        }
        let centers: Vec<Vector2<f64>> = RationalTorusPoint::two_torsion()
            .into_iter()
            .filter(|x| apply(&matrix, x) == *x)
            .map(|x| x.to_f64())
            .collect();
        for (i, a) in centers.iter().enumerate() {
            for b in &centers[i + 1..] {
                let gap = torus_distance(*a, *b);
                if 2.0 * profile.r >= gap {
                    return Err(Error::InvalidProfile(format!(
                        "supports of radius {} around centers {gap} apart overlap",
                        profile.r
                    )));
                }
            }
        }
        let linear = matrix.to_f64();
        let inverse = linear
            .try_inverse()
            .ok_or_else(|| Error::InvalidProfile(format!("{matrix} is singular")))?;
        let cosets = matrix
            .coset_representatives()
            .iter()
            .map(|(i, j)| {
                Vector2::new(
                    i.to_f64().unwrap_or(f64::NAN),
                    j.to_f64().unwrap_or(f64::NAN),
                )
            })
            .collect();
        Ok(PerturbedMap {
            matrix,
            linear,
            inverse,
            profile,
            frame,
            strength,
            centers,
            cosets,
        })
    }

    /// The construction's default: `A = [[4,1],[2,1]]`, `r = 0.2`, `mu = 0.5`.
    pub fn lattes_default() -> Self {
        Self::new(IntMatrix2::lattes_example(), SurgeryProfile::default())
            .expect("default profile is valid")
    }

    pub fn matrix(&self) -> &IntMatrix2 {
        &self.matrix
    }

    pub fn linear(&self) -> &Matrix2<f64> {
        &self.linear
    }

    pub fn profile(&self) -> &SurgeryProfile {
        &self.profile
    }

    pub fn frame(&self) -> &EigenFrame {
        &self.frame
    }

    /// `s = λ_u − μ`.
    pub fn strength(&self) -> f64 {
        self.strength
    }

    /// Surgery centers in `[0,1)²`: the 2-torsion points fixed by the matrix.
    pub fn centers(&self) -> &[Vector2<f64>] {
        &self.centers
    }

    /// The attracting fixed points of `F`; empty when the surgery is off.
    pub fn attractors(&self) -> Vec<SpherePointF> {
        if !self.profile.is_active() {
            return Vec::new();
        }
        self.centers
            .iter()
            .map(|c| SpherePointF::project(*c))
            .collect()
    }

    /// The translate of a surgery center whose support contains `x`, with the
    /// squared distance to it.
    pub fn active_center(&self, x: Vector2<f64>) -> Option<(Vector2<f64>, f64)> {
        if !self.profile.is_active() {
            return None;
        }
        let r2 = self.profile.r * self.profile.r;
        self.centers.iter().find_map(|c0| {
            let shift = x - c0;
            let c = c0 + Vector2::new(shift.x.round(), shift.y.round());
            let d2 = (x - c).norm_squared();
            (d2 < r2).then_some((c, d2))
        })
    }

    /// `G(x)` on `R²`.
    pub fn lift_apply(&self, x: Vector2<f64>) -> Vector2<f64> {
        let ax = self.linear * x;
        match self.active_center(x) {
            Some((c, d2)) => {
                let push = self.frame.project_unstable(x - c);
                ax - push * (self.strength * bump(d2, self.profile.r))
            }
            None => ax,
        }
    }

    /// `F` on the sphere.
    pub fn sphere_apply(&self, s: &SpherePointF) -> SpherePointF {
        SpherePointF::project(self.lift_apply(s.rep()))
    }

    pub fn jacobian(&self, x: Vector2<f64>, step: f64) -> Matrix2<f64> {
        fd_jacobian(|y| self.lift_apply(y), x, step)
    }

    /// Largest entrywise gap between central-difference Jacobians at steps
    /// `1e-4` and `1e-5`.
    pub fn differentiability_defect(&self, x: Vector2<f64>) -> f64 {
        (self.jacobian(x, 1e-4) - self.jacobian(x, 1e-5))
            .abs()
            .max()
    }

    /// Largest violation of `G(−x) = −G(x)` and `G(x + k) = G(x) + A·k` over
    /// `samples` seeded random points `x ∈ [−2,2]²` and shifts `k ∈ {−3..3}²`.
    pub fn equivariance_defect(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x = Vector2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let k = Vector2::new(rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64);
            let gx = self.lift_apply(x);
            worst = worst
                .max((self.lift_apply(-x) + gx).norm())
                .max((self.lift_apply(x + k) - gx - self.linear * k).norm());
        }
        worst
    }

    /// Offset `u*` along `e_u` at which `λ_u − s·h(u²) = 1`, by bisection on `(0, r)`.
    pub fn saddle_offset(&self) -> Result<f64> {
        let r = self.profile.r;
        let phi = |u: f64| self.frame.lambda_u - self.strength * bump(u * u, r) - 1.0;
        let (mut lo, mut hi) = (0.0, r);
        if !(phi(lo) < 0.0 && phi(hi) > 0.0) {
            return Err(Error::SaddleNotFound {
                center: [0.0, 0.0],
                reason: format!(
                    "no sign change of lambda_u - s*h(u^2) - 1 on (0, {r}): {} .. {}",
                    phi(lo),
                    phi(hi)
                ),
            });
        }
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if phi(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Locates the attractors and the saddles created next to them.
    pub fn find_saddles(&self) -> Result<SurgeryReport> {
        self.find_saddles_with(&NewtonOptions::default())
    }

    pub fn find_saddles_with(&self, opts: &NewtonOptions) -> Result<SurgeryReport> {
        if !self.profile.is_active() {
            return Err(Error::SaddleNotFound {
                center: [0.0, 0.0],
                reason: "surgery is disabled (r = 0)".into(),
            });
        }
        let offset = self.saddle_offset().map_err(|e| match e {
            Error::SaddleNotFound { reason, .. } => Error::SaddleNotFound {
                center: [self.centers[0].x, self.centers[0].y],
                reason,
            },
            other => other,
        })?;
        let mut attractors = Vec::new();
        let mut saddles = Vec::new();
        for &c in &self.centers {
            let jac = self.jacobian(c, opts.fd_step);
            let shift = self.lift_apply(c) - c;
            attractors.push(FixedPointEstimate {
                point: SpherePointF::project(c),
                lift: c,
                multipliers: eigenvalues(&jac),
                residual: (shift - shift.map(f64::round)).norm(),
                iterations: 0,
            });

            let seed = c + self.frame.e_u * offset;
            let k = (self.lift_apply(seed) - seed).map(f64::round);
            let sol = newton(|x| self.lift_apply(x) - x - k, seed, opts)?;
            let jac = self.jacobian(sol.x, opts.fd_step);
            saddles.push(FixedPointEstimate {
                point: SpherePointF::project(sol.x),
                lift: sol.x,
                multipliers: eigenvalues(&jac),
                residual: sol.residual,
                iterations: sol.iterations,
            });
        }
        Ok(SurgeryReport {
            offset,
            attractors,
            saddles,
        })
    }

    /// All `F`-preimages of `y`, one Newton solve per branch seeded at the
    /// linear preimage `A⁻¹(y + k)`. Each branch reports its own failure.
    pub fn preimages_perturbed(&self, y: &SpherePointF) -> Vec<Result<Preimage>> {
        self.preimages_with(y, &NewtonOptions::default())
    }

    pub fn preimages_with(&self, y: &SpherePointF, opts: &NewtonOptions) -> Vec<Result<Preimage>> {
        let yv = y.rep();
        self.cosets
            .iter()
            .map(|k| {
                let target = yv + k;
                let seed = self.inverse * target;
                newton(|x| self.lift_apply(x) - target, seed, opts).map(|sol| Preimage {
                    point: SpherePointF::project(sol.x),
                    lift: sol.x,
                    residual: sol.residual,
                    iterations: sol.iterations,
                })
            })
            .collect()
    }

    /// The distinct preimages of `y` (branches closer than `1e-9` merge).
    pub fn preimage_set(&self, y: &SpherePointF) -> Result<Vec<SpherePointF>> {
        let mut out: Vec<SpherePointF> = Vec::new();
        for branch in self.preimages_perturbed(y) {
            let p = branch?.point;
            if out.iter().all(|q| q.distance(&p) > 1e-9) {
                out.push(p);
            }
        }
        Ok(out)
    }
}

/// A fixed point of `F` with its Jacobian spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointEstimate {
    pub point: SpherePointF,
    pub lift: Vector2<f64>,
    /// Finite-difference Jacobian eigenvalues, largest modulus first.
    pub multipliers: [Complex<f64>; 2],
    pub residual: f64,
    pub iterations: usize,
}

impl FixedPointEstimate {
    pub fn moduli(&self) -> [f64; 2] {
        self.multipliers.map(|z| z.norm())
    }

    pub fn is_attracting(&self) -> bool {
        self.moduli().iter().all(|&m| m < 1.0)
    }

    pub fn is_saddle(&self) -> bool {
        let [a, b] = self.moduli();
        a > 1.0 && b < 1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurgeryReport {
    /// `u*`, the distance of each saddle from its attractor along `e_u`.
    pub offset: f64,
    pub attractors: Vec<FixedPointEstimate>,
    pub saddles: Vec<FixedPointEstimate>,
}

impl SurgeryReport {
    pub const CSV_HEADER: &'static str =
        "kind,x1,x2,multiplier_1,multiplier_2,residual,newton_iterations";

    pub fn csv_rows(&self) -> Vec<String> {
        let row = |kind: &str, e: &FixedPointEstimate| {
            let m = |z: Complex<f64>| {
                if z.im == 0.0 {
                    z.re.to_string()
                } else {
                    format!("{}{:+}i", z.re, z.im)
                }
            };
            format!(
                "{kind},{},{},{},{},{:e},{}",
                e.point.rep().x,
                e.point.rep().y,
                m(e.multipliers[0]),
                m(e.multipliers[1]),
                e.residual,
                e.iterations
            )
        };
        self.attractors
            .iter()
            .map(|e| row("attractor", e))
            .chain(self.saddles.iter().map(|e| row("saddle", e)))
            .collect()
    }
}

/// One branch of `F⁻¹(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Preimage {
    pub point: SpherePointF,
    pub lift: Vector2<f64>,
    pub residual: f64,
    pub iterations: usize,
}
