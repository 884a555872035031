use std::io;
use std::ops::Range;

use super::RbError;
use crate::csvfmt;
use crate::local_ifs::{Interval, LocalIFS1D};

/// Tolerance for matching preimages against grid points.
pub const GRID_TOL: f64 = 1e-12;

const MAX_CLOSURE_POINTS: usize = 1 << 22;

/// Sorted, duplicate-free points in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(mut points: Vec<f64>) -> Result<Self, RbError> {
        if points.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(RbError::InvalidFunction("grid point outside [0,1]".into()));
        }
        points.sort_by(f64::total_cmp);
        points.dedup_by(|a, b| (*a - *b).abs() <= GRID_TOL);
        Ok(Self { points })
    }

    /// `{k/n : 0 ≤ k < n}`.
    pub fn uniform(n: usize) -> Self {
        Self {
            points: (0..n).map(|k| k as f64 / n as f64).collect(),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the grid point within [`GRID_TOL`] of `y`.
    pub fn index_of(&self, y: f64) -> Option<usize> {
        let k = self.points.partition_point(|&p| p < y - GRID_TOL);
        (k < self.points.len() && (self.points[k] - y).abs() <= GRID_TOL).then_some(k)
    }

    /// Index range of the grid points lying in a half-open interval.
    pub fn range_in(&self, iv: &Interval) -> Range<usize> {
        let lo = self.points.partition_point(|&p| p < iv.lo - GRID_TOL);
        let hi = self.points.partition_point(|&p| p < iv.hi - GRID_TOL);
        lo..hi.max(lo)
    }

    /// Index range of the grid points in partition cell `i`, the last cell
    /// being closed at 1.
    pub fn range_in_cell(&self, ifs: &LocalIFS1D, i: usize) -> Range<usize> {
        let cell = ifs.image(i);
        if i + 1 == ifs.n_maps() {
            let lo = self.points.partition_point(|&p| p < cell.lo - GRID_TOL);
            lo..self.points.len()
        } else {
            self.range_in(&cell)
        }
    }

    /// Checks that every `u_i⁻¹(x)`, `x ∈ u_i(X_i)`, is again a grid point.
    pub fn check_admissible(&self, ifs: &LocalIFS1D) -> Result<(), RbError> {
        for i in 0..ifs.n_maps() {
            let map = ifs.maps()[i];
            for &x in &self.points[self.range_in_cell(ifs, i)] {
                let y = map.apply_inverse(x);
                if self.index_of(y).is_none() {
                    return Err(RbError::GridNotAdmissible(x));
                }
            }
        }
        Ok(())
    }

    pub fn is_admissible(&self, ifs: &LocalIFS1D) -> bool {
        self.check_admissible(ifs).is_ok()
    }
}

/// Default number of closure rounds in [`make_admissible_grid`].
const DEFAULT_BUDGET: usize = 64;

/// Uniform grid of `n_g` points if admissible, otherwise its closure under
/// the inverse maps.
pub fn make_admissible_grid(ifs: &LocalIFS1D, n_g: usize) -> Result<Grid, RbError> {
    make_admissible_grid_with_budget(ifs, n_g, DEFAULT_BUDGET)
}

pub fn make_admissible_grid_with_budget(
    ifs: &LocalIFS1D,
    n_g: usize,
    budget: usize,
) -> Result<Grid, RbError> {
    let mut grid = Grid::uniform(n_g.max(1));
    for round in 0..budget {
        let mut missing = Vec::new();
        for i in 0..ifs.n_maps() {
            let map = ifs.maps()[i];
            for &x in &grid.points[grid.range_in_cell(ifs, i)] {
                let y = map.apply_inverse(x);
                if grid.index_of(y).is_none() {
                    missing.push(y.clamp(0.0, 1.0));
                }
            }
        }
        if missing.is_empty() {
            log::debug!(
                "admissible grid with {} points after {round} rounds",
                grid.len()
            );
            return Ok(grid);
        }
        missing.extend_from_slice(&grid.points);
        grid = Grid::new(missing)?;
        if grid.len() > MAX_CLOSURE_POINTS {
            break;
        }
    }
    Err(RbError::NotAdmissible(budget))
}

/// Values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, RbError> {
        if grid.len() != values.len() {
            return Err(RbError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn sample(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Self { grid, values }
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> io::Result<()> {
        csvfmt::write_rows(
            out,
            &["x", "value"],
            self.grid
                .points()
                .iter()
                .zip(&self.values)
                .map(|(&x, &v)| [x, v]),
        )
    }
}

/// `max_k |a_k − b_k|`.
pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
