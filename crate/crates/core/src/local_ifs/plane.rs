//! Finite point sets in the plane and the set-valued operator of a local IFS.

use std::collections::BTreeSet;
use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{hausdorff_distance, LocalIfsError};
use crate::csvfmt;

const RECT_EPS: f64 = 1e-12;

/// Closed axis-aligned rectangle `[x0,x1] × [y0,y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn unit() -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn contains(&self, (x, y): (f64, f64)) -> bool {
        x >= self.x0 - RECT_EPS
            && x <= self.x1 + RECT_EPS
            && y >= self.y0 - RECT_EPS
            && y <= self.y1 + RECT_EPS
    }
}

/// `p ↦ m·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine2D {
    pub m: [[f64; 2]; 2],
    pub t: [f64; 2],
}

impl Affine2D {
    pub fn new(m: [[f64; 2]; 2], t: [f64; 2]) -> Self {
        Self { m, t }
    }

    /// Uniform scaling by `s` towards the fixed point `c`.
    pub fn scaling(s: f64, c: (f64, f64)) -> Self {
        Self::new([[s, 0.0], [0.0, s]], [(1.0 - s) * c.0, (1.0 - s) * c.1])
    }

    #[inline]
    pub fn apply(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (
            self.m[0][0] * x + self.m[0][1] * y + self.t[0],
            self.m[1][0] * x + self.m[1][1] * y + self.t[1],
        )
    }

    /// Spectral norm of the linear part.
    pub fn lipschitz(&self) -> f64 {
        let [[a, b], [c, d]] = self.m;
        // eigenvalues of mᵀm
        let p = a * a + c * c;
        let q = a * b + c * d;
        let r = b * b + d * d;
        let mean = 0.5 * (p + r);
        let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
        (mean + rad).sqrt()
    }
}

/// A planar map restricted to its domain rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMap2D {
    pub domain: Rect,
    pub map: Affine2D,
}

impl LocalMap2D {
    pub fn new(domain: Rect, map: Affine2D) -> Self {
        Self { domain, map }
    }
}

/// Finite set of planar points, sorted lexicographically without exact
/// duplicates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointSet2D {
    points: Vec<(f64, f64)>,
}

impl PointSet2D {
    pub fn new(mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        points.dedup();
        Self { points }
    }

    /// Points rounded to the nearest multiple of `pitch` and deduplicated.
    pub fn snapped(points: impl IntoIterator<Item = (f64, f64)>, pitch: f64) -> Self {
        let keys: BTreeSet<(i64, i64)> = points
            .into_iter()
            .map(|(x, y)| ((x / pitch).round() as i64, (y / pitch).round() as i64))
            .collect();
        Self {
            points: keys
                .into_iter()
                .map(|(i, j)| (i as f64 * pitch, j as f64 * pitch))
                .collect(),
        }
    }

    /// `nx × ny` uniform sample of a rectangle, corners included.
    pub fn grid_sample(r: &Rect, nx: usize, ny: usize) -> Self {
        let coord = |lo: f64, hi: f64, k: usize, n: usize| {
            if n <= 1 {
                lo
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        };
        let mut pts = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                pts.push((coord(r.x0, r.x1, i, nx), coord(r.y0, r.y1, j, ny)));
            }
        }
        Self::new(pts)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn snap(&self, pitch: f64) -> Self {
        Self::snapped(self.points.iter().copied(), pitch)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.points.iter().map(|&(x, y)| (x + dx, y + dy)).collect())
    }

    pub fn union(&self, other: &PointSet2D) -> Self {
        Self::new(self.points.iter().chain(&other.points).copied().collect())
    }

    /// Image of the set under a global IFS (every map applied to every point).
    pub fn map_global(&self, maps: &[Affine2D]) -> Self {
        let pts = self
            .points
            .par_iter()
            .flat_map_iter(|&p| maps.iter().map(move |m| m.apply(p)))
            .collect();
        Self::new(pts)
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> io::Result<()> {
        csvfmt::write_rows(out, &["x", "y"], self.points.iter().map(|&(x, y)| [x, y]))
    }

    pub fn read_csv<R: io::Read>(input: R) -> io::Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut pts = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(io::Error::other)?;
            let field = |k: usize| -> io::Result<f64> {
                rec.get(k)
                    .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "missing column"))?
                    .trim()
                    .parse()
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
            };
            pts.push((field(0)?, field(1)?));
        }
        Ok(Self::new(pts))
    }
}

/// `F_loc(S) = ⋃ f_i(S ∩ X_i)`; points outside every domain are dropped.
pub fn apply_set_operator(maps: &[LocalMap2D], s: &PointSet2D) -> PointSet2D {
    let pts = s
        .points()
        .par_iter()
        .flat_map_iter(|&p| {
            maps.iter()
                .filter(move |lm| lm.domain.contains(p))
                .map(move |lm| lm.map.apply(p))
        })
        .collect();
    PointSet2D::new(pts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorOptions {
    /// Snap grid pitch applied after every operator application.
    pub pitch: f64,
    /// Samples per side of the start set.
    pub samples: usize,
    pub max_iter: usize,
    /// Stop once successive iterates are this close in Hausdorff distance.
    pub tol: f64,
}

impl Default for AttractorOptions {
    fn default() -> Self {
        Self {
            pitch: 1e-3,
            samples: 64,
            max_iter: 200,
            tol: 0.5e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AttractorOutcome {
    /// Successive iterates agree to the tolerance.
    Converged,
    /// The iterate became empty, which is itself a fixed point.
    Empty,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct AttractorRun {
    pub set: PointSet2D,
    pub iterations: usize,
    pub outcome: AttractorOutcome,
    /// Hausdorff distance between the last two iterates (0 when empty).
    pub last_step: f64,
}

/// Iterates `K_{n+1} = snap(F_loc(K_n))` from a uniform sample of `bbox`.
pub fn iterate_attractor(
    maps: &[LocalMap2D],
    bbox: &Rect,
    opts: &AttractorOptions,
) -> AttractorRun {
    let mut current = PointSet2D::grid_sample(bbox, opts.samples, opts.samples).snap(opts.pitch);
    for it in 1..=opts.max_iter {
        let next = apply_set_operator(maps, &current).snap(opts.pitch);
        if next.is_empty() {
            log::debug!("attractor iteration emptied at step {it}");
            return AttractorRun {
                set: next,
                iterations: it,
                outcome: AttractorOutcome::Empty,
                last_step: 0.0,
            };
        }
        let step = if next == current {
            0.0
        } else {
            hausdorff_distance(&next, &current).expect("both sets nonempty")
        };
        current = next;
        if step <= opts.tol {
            return AttractorRun {
                set: current,
                iterations: it,
                outcome: AttractorOutcome::Converged,
                last_step: step,
            };
        }
    }
    let last = apply_set_operator(maps, &current).snap(opts.pitch);
    let last_step = if last.is_empty() {
        0.0
    } else {
        hausdorff_distance(&last, &current).expect("both sets nonempty")
    };
    AttractorRun {
        set: current,
        iterations: opts.max_iter,
        outcome: AttractorOutcome::MaxIter,
        last_step,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollageReport {
    /// `d_H(M, F(M))`.
    pub epsilon: f64,
    /// `ε / (1 − s)`.
    pub bound: f64,
    /// `d_H(M, A)` with `A` estimated by iterating from `M`.
    pub actual: f64,
    /// Allowance for snapping and truncating the attractor iteration.
    pub tolerance: f64,
    pub holds: bool,
}

/// Checks the collage bound `d_H(M, A) ≤ d_H(M, F(M)) / (1 − s)` for a global
/// IFS whose maps all have Lipschitz constant at most `s`.
///
/// The attractor is estimated by `iterations` snapped applications of `F`
/// starting from `M`; snapping at `pitch` perturbs it by at most
/// `pitch/√2 / (1 − s)`, which is absorbed in the reported tolerance.
pub fn verify_collage_bound(
    m: &PointSet2D,
    maps: &[Affine2D],
    s: f64,
    iterations: usize,
    pitch: f64,
) -> Result<CollageReport, LocalIfsError> {
    if !(0.0..1.0).contains(&s) {
        return Err(LocalIfsError::NotContractiveFactor(s));
    }
    if let Some(i) = maps.iter().position(|f| f.lipschitz() > s + 1e-12) {
        return Err(LocalIfsError::NotContractive(i));
    }
    if m.is_empty() || maps.is_empty() {
        return Err(LocalIfsError::EmptySet);
    }
    let epsilon = hausdorff_distance(m, &m.map_global(maps))?;
    let mut estimate = m.clone();
    for _ in 0..iterations {
        estimate = estimate.map_global(maps).snap(pitch);
    }
    let actual = hausdorff_distance(m, &estimate)?;
    let bound = epsilon / (1.0 - s);
    let diam = diameter_bound(m, &estimate);
    let tolerance = pitch * std::f64::consts::FRAC_1_SQRT_2 / (1.0 - s)
        + s.powi(iterations as i32) * diam
        + 1e-12;
    Ok(CollageReport {
        epsilon,
        bound,
        actual,
        tolerance,
        holds: actual <= bound + tolerance,
    })
}

fn diameter_bound(a: &PointSet2D, b: &PointSet2D) -> f64 {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in a.points().iter().chain(b.points()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    (x1 - x0).hypot(y1 - y0)
}
