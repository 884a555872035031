//! Binary subdivision driven by a two-map fractal function.
//!
//! Level `k` holds values on `N_k = {i/2^k : 0 ≤ i < 2^k}`. One refinement
//! step uses `f(ξ) = v_1(2ξ, f(2ξ))` on the left half and
//! `f(ξ) = v_2(2ξ − 1, f(2ξ − 1))` on the right half; both arguments lie on
//! the coarser mesh.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::csvfmt;
use crate::local_ifs::LocalIFS1D;
use crate::rb::{check_contractivity, Grid, GridFunction, Norm, RBSpec, RbError, SampledFunction};

/// Largest supported level.
pub const MAX_LEVEL: usize = 26;

const PROBES: usize = 16;
const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubdivError {
    #[error("boundary rules disagree: v_1(1, ·) = {left}, v_2(0, ·) = {right} (probe y = {y})")]
    IncompatibleBoundary { y: f64, left: f64, right: f64 },
    #[error("level {0} exceeds the supported maximum {MAX_LEVEL}")]
    LevelTooDeep(usize),
    #[error("level {k} needs {expected} values, got {got}")]
    LengthMismatch {
        k: usize,
        expected: usize,
        got: usize,
    },
    #[error("spec is not on the binary IFS")]
    NotBinary,
    #[error("scalings are not contractive (max |S| = {0})")]
    NotContractive(f64),
    #[error("seed iteration did not converge")]
    SeedDiverged,
    #[error(transparent)]
    Rb(#[from] RbError),
}

/// Values on the dyadic mesh of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementLevel {
    k: usize,
    values: Vec<f64>,
}

impl RefinementLevel {
    pub fn new(k: usize, values: Vec<f64>) -> Result<Self, SubdivError> {
        if k > MAX_LEVEL {
            return Err(SubdivError::LevelTooDeep(k));
        }
        let expected = 1usize << k;
        if values.len() != expected {
            return Err(SubdivError::LengthMismatch {
                k,
                expected,
                got: values.len(),
            });
        }
        Ok(Self { k, values })
    }

    /// Level 0 with the value at 0.
    pub fn seed(value: f64) -> Self {
        Self {
            k: 0,
            values: vec![value],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `N_k`.
    pub fn mesh(&self) -> Vec<f64> {
        let n = self.values.len() as f64;
        (0..self.values.len()).map(|i| i as f64 / n).collect()
    }

    /// Values at the mesh points of the coarser level `j ≤ k`.
    pub fn restrict(&self, j: usize) -> Vec<f64> {
        let step = 1usize << (self.k - j.min(self.k));
        self.values.iter().step_by(step).copied().collect()
    }

    pub fn into_grid_function(self) -> GridFunction {
        let n = self.values.len();
        GridFunction {
            grid: Grid::uniform(n),
            values: self.values,
        }
    }
}

/// Boundary condition checked before refining.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Compatibility {
    /// `v_1(1, y) = v_2(0, y)` for every `y`, probed on 16 values.
    #[default]
    Uniform,
    /// `v_1(1, y_1) = v_2(0, y_0)` where `y_0` is fixed by `v_1(0, ·)` and
    /// `y_1` by `v_2(1, ·)`: the two halves of the limit join at `½`.
    Endpoints,
}

fn disagree(left: f64, right: f64) -> bool {
    !((left - right).abs() <= 1e-9 * (1.0 + left.abs().max(right.abs())))
}

/// Checks the boundary condition.
pub fn check_boundary<F1, F2>(v1: &F1, v2: &F2, mode: Compatibility) -> Result<(), SubdivError>
where
    F1: Fn(f64, f64) -> f64,
    F2: Fn(f64, f64) -> f64,
{
    match mode {
        Compatibility::Uniform => {
            for k in 0..PROBES {
                let y = -4.0 + 8.0 * k as f64 / (PROBES - 1) as f64;
                let (left, right) = (v1(1.0, y), v2(0.0, y));
                if disagree(left, right) {
                    return Err(SubdivError::IncompatibleBoundary { y, left, right });
                }
            }
        }
        Compatibility::Endpoints => {
            let y0 = fixed_point(|y| v1(0.0, y))?;
            let y1 = fixed_point(|y| v2(1.0, y))?;
            let (left, right) = (v1(1.0, y1), v2(0.0, y0));
            if disagree(left, right) {
                return Err(SubdivError::IncompatibleBoundary { y: y1, left, right });
            }
        }
    }
    Ok(())
}

fn refine_unchecked<F1, F2>(level: &RefinementLevel, v1: &F1, v2: &F2) -> RefinementLevel
where
    F1: Fn(f64, f64) -> f64 + Sync,
    F2: Fn(f64, f64) -> f64 + Sync,
{
    let n = level.values.len();
    let h = 1.0 / n as f64;
    let f = &level.values;
    let point = |i: usize| {
        if i < n {
            v1(i as f64 * h, f[i])
        } else {
            v2((i - n) as f64 * h, f[i - n])
        }
    };
    let values = if 2 * n >= PAR_THRESHOLD {
        (0..2 * n).into_par_iter().map(point).collect()
    } else {
        (0..2 * n).map(point).collect()
    };
    RefinementLevel {
        k: level.k + 1,
        values,
    }
}

/// One refinement step `R_k`.
pub fn refine<F1, F2>(
    level: &RefinementLevel,
    v1: &F1,
    v2: &F2,
    mode: Compatibility,
) -> Result<RefinementLevel, SubdivError>
where
    F1: Fn(f64, f64) -> f64 + Sync,
    F2: Fn(f64, f64) -> f64 + Sync,
{
    if level.k >= MAX_LEVEL {
        return Err(SubdivError::LevelTooDeep(level.k + 1));
    }
    check_boundary(v1, v2, mode)?;
    Ok(refine_unchecked(level, v1, v2))
}

/// All levels from `seed` up to `seed.k() + levels`.
pub fn subdivide<F1, F2>(
    v1: &F1,
    v2: &F2,
    seed: RefinementLevel,
    levels: usize,
    mode: Compatibility,
) -> Result<Vec<RefinementLevel>, SubdivError>
where
    F1: Fn(f64, f64) -> f64 + Sync,
    F2: Fn(f64, f64) -> f64 + Sync,
{
    if seed.k + levels > MAX_LEVEL {
        return Err(SubdivError::LevelTooDeep(seed.k + levels));
    }
    check_boundary(v1, v2, mode)?;
    let mut out = vec![seed];
    for _ in 0..levels {
        let next = refine_unchecked(out.last().unwrap(), v1, v2);
        out.push(next);
    }
    Ok(out)
}

/// Values at level `seed.k() + levels`.
pub fn subdivision_limit<F1, F2>(
    v1: &F1,
    v2: &F2,
    seed: RefinementLevel,
    levels: usize,
    mode: Compatibility,
) -> Result<GridFunction, SubdivError>
where
    F1: Fn(f64, f64) -> f64 + Sync,
    F2: Fn(f64, f64) -> f64 + Sync,
{
    let last = subdivide(v1, v2, seed, levels, mode)?.pop().unwrap();
    Ok(last.into_grid_function())
}

/// `max |level_{k+1}|_{N_k} − level_k|` for consecutive levels.
pub fn cauchy_differences(levels: &[RefinementLevel]) -> Vec<f64> {
    levels
        .windows(2)
        .map(|w| {
            let coarse = w[1].restrict(w[0].k);
            crate::rb::sup_distance(&coarse, &w[0].values)
        })
        .collect()
}

/// Fixed point of `y ↦ v_1(0, y)`, the value at 0.
pub fn fixed_seed<F: Fn(f64, f64) -> f64>(v1: &F) -> Result<f64, SubdivError> {
    fixed_point(|y| v1(0.0, y))
}

fn fixed_point(g: impl Fn(f64) -> f64) -> Result<f64, SubdivError> {
    let mut y = 0.0;
    for _ in 0..10_000 {
        let next = g(y);
        if !next.is_finite() {
            break;
        }
        if (next - y).abs() <= 1e-15 * (1.0 + y.abs()) {
            return Ok(next);
        }
        y = next;
    }
    Err(SubdivError::SeedDiverged)
}

/// `v_i(x, y) = λ_i(x) + S_i(x)·y` for a spec on the binary IFS.
#[derive(Debug, Clone)]
pub struct AffineRules {
    spec: RBSpec,
    mode: Compatibility,
}

impl AffineRules {
    pub fn new(spec: RBSpec, mode: Compatibility) -> Result<Self, SubdivError> {
        if spec.ifs() != &LocalIFS1D::binary() {
            return Err(SubdivError::NotBinary);
        }
        let r = check_contractivity(&spec, Norm::Infinity)?;
        if !r.contractive {
            return Err(SubdivError::NotContractive(r.value));
        }
        Ok(Self { spec, mode })
    }

    pub fn spec(&self) -> &RBSpec {
        &self.spec
    }

    pub fn v(&self, i: usize, x: f64, y: f64) -> f64 {
        self.spec.lambdas()[i].eval(x) + self.spec.scalings()[i].eval(x) * y
    }

    /// `λ_1(0) / (1 − S_1(0))`.
    pub fn seed(&self) -> RefinementLevel {
        let (l, s) = (
            self.spec.lambdas()[0].eval(0.0),
            self.spec.scalings()[0].eval(0.0),
        );
        RefinementLevel::seed(l / (1.0 - s))
    }

    /// Levels `0..=levels` from the exact seed.
    pub fn subdivide(&self, levels: usize) -> Result<Vec<RefinementLevel>, SubdivError> {
        subdivide(
            &|x, y| self.v(0, x, y),
            &|x, y| self.v(1, x, y),
            self.seed(),
            levels,
            self.mode,
        )
    }
}

/// Random spec on the binary IFS with affine `λ_i` and `S_i`, `|S_i| ≤ 0.9`,
/// satisfying `λ_2(0) = λ_1(1)` and `S_2(0) = S_1(1)`.
pub fn random_compatible_spec(seed: u64) -> RBSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = || rng.random_range(-1.0..1.0);
    let (l0, l1, l2) = (u(), u(), u());
    let (s0, s1, s2) = (0.9 * u(), 0.9 * u(), 0.9 * u());
    let affine = |a: f64, b: f64| SampledFunction::Affine {
        alpha: a,
        beta: b - a,
    };
    RBSpec::new(
        LocalIFS1D::binary(),
        vec![affine(l0, l1), affine(l1, l2)],
        vec![affine(s0, s1), affine(s1, s2)],
    )
    .expect("affine functions cover [0,1]")
}

/// CSV with header `level,x,value`.
pub fn write_levels_csv<W: io::Write>(out: W, levels: &[RefinementLevel]) -> io::Result<()> {
    csvfmt::write_rows(
        out,
        &["level", "x", "value"],
        levels.iter().flat_map(|l| {
            let k = l.k as f64;
            l.mesh()
                .into_iter()
                .zip(l.values.iter().copied())
                .map(move |(x, v)| [k, x, v])
        }),
    )
}
