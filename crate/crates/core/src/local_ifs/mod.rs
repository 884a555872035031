//! One-dimensional local IFSs on `[0,1]` and their planar set-valued cousins.
//!
//! A [`LocalIFS1D`] is a family of affine maps `u_i`, each defined on its own
//! half-open domain `X_i ⊆ [0,1)`, whose images tile the partition cells
//! `[x_{i-1}, x_i)` of a [`Partition1D`]. The last cell is closed at 1.
//!
//! The planar machinery in [`plane`] works on finite point sets standing in
//! for subsets of the unit square.

mod hausdorff;
pub mod plane;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hausdorff::{directed_hausdorff, hausdorff_distance};
pub use plane::{
    apply_set_operator, iterate_attractor, verify_collage_bound, Affine2D, AttractorOptions,
    AttractorOutcome, AttractorRun, CollageReport, LocalMap2D, PointSet2D, Rect,
};

/// Absolute tolerance used when matching map images against partition knots.
pub const IMAGE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalIfsError {
    #[error("partition needs at least two knots, got {0}")]
    TooFewKnots(usize),
    #[error("partition must start at exactly 0 and end at exactly 1")]
    BadEndpoints,
    #[error("partition knots must be strictly increasing (knot {0})")]
    NotIncreasing(usize),
    #[error("a local IFS needs at least two maps, got {0}")]
    TooFewMaps(usize),
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("domain of map {0} is empty or leaves [0,1]")]
    DomainOutsideUnit(usize),
    #[error("map {0} is degenerate (zero slope)")]
    DegenerateMap(usize),
    #[error("images of maps {0} and {1} overlap")]
    OverlappingImages(usize, usize),
    #[error("image of map {map} is [{lo}, {hi}), expected partition cell [{cell_lo}, {cell_hi})")]
    MismatchedImage {
        map: usize,
        lo: f64,
        hi: f64,
        cell_lo: f64,
        cell_hi: f64,
    },
    #[error("map {0} is not contractive")]
    NotContractive(usize),
    #[error("digit {digit} out of range 1..={n}")]
    InvalidDigit { digit: usize, n: usize },
    #[error("address must contain at least one digit")]
    EmptyAddress,
    #[error("point sets must be nonempty")]
    EmptySet,
    #[error("contraction factor {0} is not in [0,1)")]
    NotContractiveFactor(f64),
}

/// Ordered knots `0 = x_0 < x_1 < … < x_N = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Partition1D {
    knots: Vec<f64>,
}

impl Partition1D {
    pub fn new(knots: Vec<f64>) -> Result<Self, LocalIfsError> {
        if knots.len() < 2 {
            return Err(LocalIfsError::TooFewKnots(knots.len()));
        }
        if knots[0] != 0.0 || *knots.last().unwrap() != 1.0 {
            return Err(LocalIfsError::BadEndpoints);
        }
        for (k, w) in knots.windows(2).enumerate() {
            if !(w[0] < w[1]) {
                return Err(LocalIfsError::NotIncreasing(k + 1));
            }
        }
        Ok(Self { knots })
    }

    /// `n` equal cells.
    pub fn uniform(n: usize) -> Result<Self, LocalIfsError> {
        if n == 0 {
            return Err(LocalIfsError::TooFewKnots(1));
        }
        Self::new((0..=n).map(|k| k as f64 / n as f64).collect())
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn n_cells(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn cell(&self, i: usize) -> Interval {
        Interval::new(self.knots[i], self.knots[i + 1])
    }

    /// Index of the cell containing `x`, with the last cell closed at 1.
    /// Points within `tol` below a knot are treated as lying on it.
    pub fn cell_of(&self, x: f64, tol: f64) -> Option<usize> {
        let n = self.n_cells();
        if x < -tol || x > 1.0 + tol {
            return None;
        }
        // first knot strictly above x (after snapping x up onto nearby knots)
        let idx = self.knots.partition_point(|&k| k <= x + tol);
        Some(idx.saturating_sub(1).min(n - 1))
    }
}

impl<'de> Deserialize<'de> for Partition1D {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let knots = Vec::<f64>::deserialize(d)?;
        Partition1D::new(knots).map_err(serde::de::Error::custom)
    }
}

/// Half-open interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `lo ≤ x < hi` with both ends shifted down by `tol`, so grid points
    /// rounding a hair below a knot are assigned to the cell starting there.
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x < self.hi - tol
    }

    pub fn contains_interval(&self, other: &Interval, tol: f64) -> bool {
        other.lo >= self.lo - tol && other.hi <= self.hi + tol
    }
}

impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.lo, self.hi].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [lo, hi] = <[f64; 2]>::deserialize(d)?;
        Ok(Interval { lo, hi })
    }
}

/// `x ↦ a·x + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap1D {
    pub a: f64,
    pub b: f64,
}

impl AffineMap1D {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        self.a * x + self.b
    }

    #[inline]
    pub fn apply_inverse(&self, y: f64) -> f64 {
        (y - self.b) / self.a
    }

    pub fn lipschitz(&self) -> f64 {
        self.a.abs()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap1D) -> AffineMap1D {
        AffineMap1D::new(self.a * inner.a, self.a * inner.b + self.b)
    }

    /// Image of an interval, endpoints sorted.
    pub fn image(&self, iv: &Interval) -> Interval {
        let (p, q) = (self.apply(iv.lo), self.apply(iv.hi));
        Interval::new(p.min(q), p.max(q))
    }
}

/// Validated local IFS on `[0,1]` satisfying property (P): the images
/// `u_i(X_i)` are exactly the partition cells `[x_{i-1}, x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LocalIfsDoc", into = "LocalIfsDoc")]
pub struct LocalIFS1D {
    partition: Partition1D,
    domains: Vec<Interval>,
    maps: Vec<AffineMap1D>,
}

#[derive(Serialize, Deserialize)]
struct LocalIfsDoc {
    knots: Vec<f64>,
    domains: Vec<Interval>,
    maps: Vec<AffineMap1D>,
}

impl TryFrom<LocalIfsDoc> for LocalIFS1D {
    type Error = LocalIfsError;
    fn try_from(doc: LocalIfsDoc) -> Result<Self, Self::Error> {
        LocalIFS1D::new(Partition1D::new(doc.knots)?, doc.domains, doc.maps)
    }
}

impl From<LocalIFS1D> for LocalIfsDoc {
    fn from(ifs: LocalIFS1D) -> Self {
        LocalIfsDoc {
            knots: ifs.partition.knots,
            domains: ifs.domains,
            maps: ifs.maps,
        }
    }
}

impl LocalIFS1D {
    pub fn new(
        partition: Partition1D,
        domains: Vec<Interval>,
        maps: Vec<AffineMap1D>,
    ) -> Result<Self, LocalIfsError> {
        let n = partition.n_cells();
        if n < 2 {
            return Err(LocalIfsError::TooFewMaps(n));
        }
        for len in [domains.len(), maps.len()] {
            if len != n {
                return Err(LocalIfsError::LengthMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        for (i, d) in domains.iter().enumerate() {
            if !(d.lo >= 0.0 && d.hi <= 1.0 && d.lo < d.hi) {
                return Err(LocalIfsError::DomainOutsideUnit(i));
            }
        }
        for (i, m) in maps.iter().enumerate() {
            if m.a == 0.0 || !m.a.is_finite() || !m.b.is_finite() {
                return Err(LocalIfsError::DegenerateMap(i));
            }
        }
        let images: Vec<Interval> = maps.iter().zip(&domains).map(|(m, d)| m.image(d)).collect();
        for i in 0..n {
            for j in i + 1..n {
                let overlap = images[i].hi.min(images[j].hi) - images[i].lo.max(images[j].lo);
                if overlap > IMAGE_TOL {
                    return Err(LocalIfsError::OverlappingImages(i, j));
                }
            }
        }
        for (i, img) in images.iter().enumerate() {
            let cell = partition.cell(i);
            if (img.lo - cell.lo).abs() > IMAGE_TOL || (img.hi - cell.hi).abs() > IMAGE_TOL {
                return Err(LocalIfsError::MismatchedImage {
                    map: i,
                    lo: img.lo,
                    hi: img.hi,
                    cell_lo: cell.lo,
                    cell_hi: cell.hi,
                });
            }
        }
        Ok(Self {
            partition,
            domains,
            maps,
        })
    }

    /// The global binary IFS `x/2`, `(x+1)/2` on `[0,1)`.
    pub fn binary() -> Self {
        Self::new(
            Partition1D::new(vec![0.0, 0.5, 1.0]).expect("static partition"),
            vec![Interval::new(0.0, 1.0); 2],
            vec![AffineMap1D::new(0.5, 0.0), AffineMap1D::new(0.5, 0.5)],
        )
        .expect("binary IFS is valid")
    }

    /// Paired-halving layout with `n` (even) maps: `X_{2j-1} = X_{2j} =
    /// [(j-1)h, jh)` with `h = 2/n`, `u_{2j-1}(x) = (x + (j-1)h)/2` and
    /// `u_{2j}(x) = (x + jh)/2`, so that `u_i(X_i) = [(i-1)h/2, ih/2)`.
    pub fn paired_halving(n: usize) -> Result<Self, LocalIfsError> {
        if n < 2 {
            return Err(LocalIfsError::TooFewMaps(n));
        }
        if !n.is_multiple_of(2) {
            return Err(LocalIfsError::LengthMismatch {
                expected: n + 1,
                got: n,
            });
        }
        let h = 2.0 / n as f64;
        let knot = |k: usize| if k == n { 1.0 } else { k as f64 / n as f64 };
        let partition = Partition1D::new((0..=n).map(knot).collect())?;
        let mut domains = Vec::with_capacity(n);
        let mut maps = Vec::with_capacity(n);
        for j in 1..=n / 2 {
            let lo = knot(2 * (j - 1));
            let hi = knot(2 * j);
            domains.push(Interval::new(lo, hi));
            domains.push(Interval::new(lo, hi));
            maps.push(AffineMap1D::new(0.5, (j - 1) as f64 * h / 2.0));
            maps.push(AffineMap1D::new(0.5, j as f64 * h / 2.0));
        }
        Self::new(partition, domains, maps)
    }

    pub fn n_maps(&self) -> usize {
        self.maps.len()
    }

    pub fn partition(&self) -> &Partition1D {
        &self.partition
    }

    pub fn domains(&self) -> &[Interval] {
        &self.domains
    }

    pub fn maps(&self) -> &[AffineMap1D] {
        &self.maps
    }

    /// `u_i(X_i)`, which equals partition cell `i`.
    pub fn image(&self, i: usize) -> Interval {
        self.partition.cell(i)
    }

    /// Lipschitz constants `a_i = |slope of u_i|`.
    pub fn lipschitz_constants(&self) -> Vec<f64> {
        self.maps.iter().map(AffineMap1D::lipschitz).collect()
    }

    /// Index of the map whose image contains `x`.
    pub fn image_index(&self, x: f64, tol: f64) -> Option<usize> {
        self.partition.cell_of(x, tol)
    }

    /// The interval `u_{σ_1} ∘ ⋯ ∘ u_{σ_K}([0,1])` for a 1-based code `σ`.
    ///
    /// Every map must be a strict contraction; the returned interval then has
    /// width at most `max_i |a_i|^K`.
    pub fn address_point(&self, sigma: &[usize]) -> Result<Interval, LocalIfsError> {
        if sigma.is_empty() {
            return Err(LocalIfsError::EmptyAddress);
        }
        if let Some(i) = self.maps.iter().position(|m| m.lipschitz() >= 1.0) {
            return Err(LocalIfsError::NotContractive(i));
        }
        let n = self.n_maps();
        if let Some(&digit) = sigma.iter().find(|&&d| d == 0 || d > n) {
            return Err(LocalIfsError::InvalidDigit { digit, n });
        }
        let composed = sigma
            .iter()
            .rev()
            .fold(AffineMap1D::new(1.0, 0.0), |acc, &d| {
                self.maps[d - 1].compose(&acc)
            });
        Ok(composed.image(&Interval::new(0.0, 1.0)))
    }
}
