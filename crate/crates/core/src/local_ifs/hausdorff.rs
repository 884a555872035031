use rayon::prelude::*;

use super::{LocalIfsError, PointSet2D};

/// Uniform bucket grid over a point cloud for nearest-neighbour queries.
struct Buckets<'a> {
    pts: &'a [(f64, f64)],
    x0: f64,
    y0: f64,
    cell: f64,
    nx: i64,
    ny: i64,
    start: Vec<usize>,
    order: Vec<usize>,
}

impl<'a> Buckets<'a> {
    fn new(pts: &'a [(f64, f64)]) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let span = (x1 - x0).max(y1 - y0);
        let per_side = (pts.len() as f64).sqrt().ceil().max(1.0);
        let cell = if span > 0.0 { span / per_side } else { 1.0 };
        let nx = (((x1 - x0) / cell).floor() as i64 + 1).max(1);
        let ny = (((y1 - y0) / cell).floor() as i64 + 1).max(1);
        let mut b = Buckets {
            pts,
            x0,
            y0,
            cell,
            nx,
            ny,
            start: Vec::new(),
            order: Vec::new(),
        };
        // counting sort of point indices by bucket
        let n_cells = (nx * ny) as usize;
        let ids: Vec<usize> = pts.iter().map(|&p| b.bucket_id(p)).collect();
        let mut start = vec![0usize; n_cells + 1];
        for &id in &ids {
            start[id + 1] += 1;
        }
        for k in 0..n_cells {
            start[k + 1] += start[k];
        }
        let mut fill = start.clone();
        let mut order = vec![0usize; pts.len()];
        for (i, &id) in ids.iter().enumerate() {
            order[fill[id]] = i;
            fill[id] += 1;
        }
        b.start = start;
        b.order = order;
        b
    }

    fn coords(&self, (x, y): (f64, f64)) -> (i64, i64) {
        (
            ((x - self.x0) / self.cell).floor() as i64,
            ((y - self.y0) / self.cell).floor() as i64,
        )
    }

    fn bucket_id(&self, p: (f64, f64)) -> usize {
        let (i, j) = self.coords(p);
        (i.clamp(0, self.nx - 1) * self.ny + j.clamp(0, self.ny - 1)) as usize
    }

    fn scan(&self, i: i64, j: i64, q: (f64, f64), best: &mut f64) {
        if i < 0 || j < 0 || i >= self.nx || j >= self.ny {
            return;
        }
        let id = (i * self.ny + j) as usize;
        for &k in &self.order[self.start[id]..self.start[id + 1]] {
            let (px, py) = self.pts[k];
            let d = (px - q.0).hypot(py - q.1);
            if d < *best {
                *best = d;
            }
        }
    }

    /// Exact Euclidean distance from `q` to the nearest stored point.
    fn nearest(&self, q: (f64, f64)) -> f64 {
        let (qi, qj) = self.coords(q);
        let reach = [qi, self.nx - 1 - qi, qj, self.ny - 1 - qj]
            .iter()
            .map(|v| v.abs())
            .max()
            .unwrap();
        let mut best = f64::INFINITY;
        let mut r = 0i64;
        loop {
            if r == 0 {
                self.scan(qi, qj, q, &mut best);
            } else {
                for di in -r..=r {
                    self.scan(qi + di, qj - r, q, &mut best);
                    self.scan(qi + di, qj + r, q, &mut best);
                }
                for dj in -r + 1..r {
                    self.scan(qi - r, qj + dj, q, &mut best);
                    self.scan(qi + r, qj + dj, q, &mut best);
                }
            }
            // every cell in ring r + 1 lies at least r cells away
            if best <= r as f64 * self.cell || r >= reach {
                return best;
            }
            r += 1;
        }
    }
}

/// `max_{p ∈ a} min_{q ∈ b} |p − q|`.
pub fn directed_hausdorff(a: &PointSet2D, b: &PointSet2D) -> Result<f64, LocalIfsError> {
    if a.is_empty() || b.is_empty() {
        return Err(LocalIfsError::EmptySet);
    }
    let grid = Buckets::new(b.points());
    Ok(a.points()
        .par_iter()
        .map(|&p| grid.nearest(p))
        .reduce(|| 0.0, f64::max))
}

/// Hausdorff distance between two finite nonempty point sets.
pub fn hausdorff_distance(a: &PointSet2D, b: &PointSet2D) -> Result<f64, LocalIfsError> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}
