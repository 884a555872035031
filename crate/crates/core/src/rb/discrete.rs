use std::ops::Range;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{check_contractivity, Grid, GridFunction, Norm, RBSpec, RbError};

const PAR_THRESHOLD: usize = 1 << 14;

/// The factors `U_i`, `S_i`, `E_i` and `λ_i` samples of one map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapBlock {
    pub map: usize,
    /// Grid indices of `u_i(X_i)`.
    pub rows: Range<usize>,
    /// Grid indices of `X_i` (the restriction `E_i`).
    pub domain: Range<usize>,
    /// For each row, the offset of its preimage inside `domain` (`U_i`).
    pub pick: Vec<usize>,
    /// `S_i` sampled on the domain points.
    pub scale: Vec<f64>,
    /// `λ_i` sampled on the domain points.
    pub lambda: Vec<f64>,
}

/// Grouping of maps into independent blocks of the operator.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    /// Map indices of each block, ascending.
    pub maps: Vec<Vec<usize>>,
    /// Grid indices touched by each block, ascending.
    pub indices: Vec<Vec<usize>>,
}

/// `Φ^g f = λ^g + M f` with `M = U S E` on an admissible grid.
#[derive(Debug, Clone)]
pub struct DiscreteRB {
    grid: Grid,
    blocks: Vec<MapBlock>,
    source: Vec<usize>,
    row_scale: Vec<f64>,
    lambda_vec: Vec<f64>,
    s_inf: f64,
    block_partition: Option<BlockPartition>,
}

/// Samples a spec on an admissible grid.
pub fn assemble(spec: &RBSpec, grid: &Grid) -> Result<DiscreteRB, RbError> {
    grid.check_admissible(spec.ifs())?;
    let ifs = spec.ifs();
    let n = grid.len();
    let mut blocks = Vec::with_capacity(ifs.n_maps());
    let mut source = vec![0usize; n];
    for i in 0..ifs.n_maps() {
        let map = ifs.maps()[i];
        let rows = grid.range_in_cell(ifs, i);
        let mut global_pick = Vec::with_capacity(rows.len());
        for &x in &grid.points()[rows.clone()] {
            let k = grid
                .index_of(map.apply_inverse(x))
                .ok_or(RbError::GridNotAdmissible(x))?;
            global_pick.push(k);
        }
        let mut domain = grid.range_in(&ifs.domains()[i]);
        // reflecting maps reach the closed end of their domain
        for &k in &global_pick {
            if domain.is_empty() {
                domain = k..k + 1;
            }
            domain.start = domain.start.min(k);
            domain.end = domain.end.max(k + 1);
        }
        let pts = &grid.points()[domain.clone()];
        let scale = pts.iter().map(|&y| spec.scalings()[i].eval(y)).collect();
        let lambda = pts.iter().map(|&y| spec.lambdas()[i].eval(y)).collect();
        for (r, &k) in rows.clone().zip(&global_pick) {
            source[r] = k;
        }
        let pick = global_pick.iter().map(|k| k - domain.start).collect();
        blocks.push(MapBlock {
            map: i,
            rows,
            domain,
            pick,
            scale,
            lambda,
        });
    }
    let mut row_scale = vec![0.0; n];
    let mut lambda_vec = vec![0.0; n];
    for b in &blocks {
        for (r, &p) in b.rows.clone().zip(&b.pick) {
            row_scale[r] = b.scale[p];
            lambda_vec[r] = b.lambda[p];
        }
    }
    let s_inf = check_contractivity(spec, Norm::Infinity)?.value;
    let mut rb = DiscreteRB {
        grid: grid.clone(),
        blocks,
        source,
        row_scale,
        lambda_vec,
        s_inf,
        block_partition: None,
    };
    rb.block_partition = detect_local_refinement(&rb);
    Ok(rb)
}

impl DiscreteRB {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn map_blocks(&self) -> &[MapBlock] {
        &self.blocks
    }

    /// `λ^g`.
    pub fn lambda_vec(&self) -> &[f64] {
        &self.lambda_vec
    }

    /// Column index of the single nonzero entry of each row of `M`.
    pub fn source(&self) -> &[usize] {
        &self.source
    }

    /// Value of the single nonzero entry of each row of `M`.
    pub fn row_scale(&self) -> &[f64] {
        &self.row_scale
    }

    /// `max_i ‖S_i‖_∞` of the spec this operator was sampled from.
    pub fn spec_contraction(&self) -> f64 {
        self.s_inf
    }

    /// `max |diag(S)|` over the grid.
    pub fn grid_contraction(&self) -> f64 {
        self.row_scale.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn block_partition(&self) -> Option<&BlockPartition> {
        self.block_partition.as_ref()
    }

    /// Same operator with `λ^g` replaced.
    pub fn with_lambda_vec(&self, lambda_vec: Vec<f64>) -> Result<Self, RbError> {
        self.check_len(lambda_vec.len())?;
        Ok(Self {
            lambda_vec,
            ..self.clone()
        })
    }

    fn check_len(&self, got: usize) -> Result<(), RbError> {
        if got != self.len() {
            return Err(RbError::LengthMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }

    /// `out = λ^g + M f`.
    pub fn apply_into(&self, f: &[f64], out: &mut [f64]) -> Result<(), RbError> {
        self.check_len(f.len())?;
        self.check_len(out.len())?;
        let row = |(r, o): (usize, &mut f64)| {
            *o = self.lambda_vec[r] + self.row_scale[r] * f[self.source[r]];
        };
        if out.len() >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(row);
        } else {
            out.iter_mut().enumerate().for_each(row);
        }
        Ok(())
    }

    /// `Φ^g f = λ^g + M f`.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>, RbError> {
        let mut out = vec![0.0; self.len()];
        self.apply_into(f, &mut out)?;
        Ok(out)
    }

    pub fn apply_fn(&self, f: &GridFunction) -> Result<GridFunction, RbError> {
        Ok(GridFunction {
            grid: self.grid.clone(),
            values: self.apply(&f.values)?,
        })
    }

    /// `M f`.
    pub fn apply_linear(&self, f: &[f64]) -> Result<Vec<f64>, RbError> {
        self.check_len(f.len())?;
        Ok((0..self.len())
            .map(|r| self.row_scale[r] * f[self.source[r]])
            .collect())
    }

    /// `λ^g + Σ_i U_i S_i E_i f`, applying the three factors in turn.
    pub fn apply_factored(&self, f: &[f64]) -> Result<Vec<f64>, RbError> {
        self.check_len(f.len())?;
        let mut out = vec![0.0; self.len()];
        for b in &self.blocks {
            let restricted = &f[b.domain.clone()];
            let scaled: Vec<f64> = restricted
                .iter()
                .zip(&b.scale)
                .map(|(v, s)| s * v)
                .collect();
            for (r, &p) in b.rows.clone().zip(&b.pick) {
                out[r] = b.lambda[p] + scaled[p];
            }
        }
        Ok(out)
    }

    /// Dense `M`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for r in 0..n {
            m[(r, self.source[r])] += self.row_scale[r];
        }
        m
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Finest grouping of maps such that within each group every domain's grid
/// points are exactly the union of the group's images.
///
/// Returns `None` when the linked groups do not satisfy this exact-cover
/// condition. A single block covering all maps is a valid answer.
pub fn detect_local_refinement(rb: &DiscreteRB) -> Option<BlockPartition> {
    let n_maps = rb.blocks.len();
    let mut owner = vec![usize::MAX; rb.len()];
    for b in &rb.blocks {
        for r in b.rows.clone() {
            owner[r] = b.map;
        }
    }
    let mut uf = UnionFind((0..n_maps).collect());
    for b in &rb.blocks {
        for k in b.domain.clone() {
            uf.union(b.map, owner[k]);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of_group = Vec::new();
    for i in 0..n_maps {
        let r = uf.find(i);
        match root_of_group.iter().position(|&x| x == r) {
            Some(g) => groups[g].push(i),
            None => {
                root_of_group.push(r);
                groups.push(vec![i]);
            }
        }
    }
    let mut indices = Vec::with_capacity(groups.len());
    let mut block_of_index = vec![usize::MAX; rb.len()];
    for (g, maps) in groups.iter().enumerate() {
        let mut image: Vec<usize> = maps
            .iter()
            .flat_map(|&i| rb.blocks[i].rows.clone())
            .collect();
        image.sort_unstable();
        for &i in maps {
            let dom = &rb.blocks[i].domain;
            if !image.iter().copied().eq(dom.clone()) {
                return None;
            }
        }
        for &k in &image {
            block_of_index[k] = g;
        }
        indices.push(image);
    }
    // block-diagonality of M
    for (r, &c) in rb.source.iter().enumerate() {
        if block_of_index[r] != block_of_index[c] {
            return None;
        }
    }
    Some(BlockPartition {
        maps: groups,
        indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_ifs::{AffineMap1D, Interval, LocalIFS1D, Partition1D};
    use crate::rb::SampledFunction;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_spec_gives_zero_operator() {
        let ifs = LocalIFS1D::paired_halving(4).unwrap();
        let spec = RBSpec::constant(ifs, &[0.0; 4], &[0.0; 4]).unwrap();
        let rb = assemble(&spec, &Grid::uniform(16)).unwrap();
        assert!(rb.lambda_vec().iter().all(|&v| v == 0.0));
        assert!(rb.to_dense().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_pair_samples_every_second_point() {
        let (s1, s2) = (0.3, -0.6);
        let spec = RBSpec::constant(
            LocalIFS1D::paired_halving(2).unwrap(),
            &[0.0, 0.0],
            &[s1, s2],
        )
        .unwrap();
        let n = 8;
        let m = assemble(&spec, &Grid::uniform(n)).unwrap().to_dense();
        let mut expected = DMatrix::zeros(n, n);
        for r in 0..n / 2 {
            expected[(r, 2 * r)] = s1;
            expected[(r + n / 2, 2 * r)] = s2;
        }
        assert_eq!(m, expected);
    }

    #[test]
    fn factored_matches_composed_and_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ifs = LocalIFS1D::paired_halving(8).unwrap();
        let aff = |rng: &mut ChaCha8Rng| SampledFunction::Affine {
            alpha: rng.random_range(-1.0..1.0),
            beta: rng.random_range(-0.5..0.5),
        };
        let lambdas = (0..8).map(|_| aff(&mut rng)).collect();
        let scalings = (0..8).map(|_| aff(&mut rng)).collect();
        let spec = RBSpec::new(ifs, lambdas, scalings).unwrap();
        let rb = assemble(&spec, &Grid::uniform(64)).unwrap();
        let dense = rb.to_dense();
        for _ in 0..20 {
            let f: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = rb.apply(&f).unwrap();
            let b = rb.apply_factored(&f).unwrap();
            let c = &dense * nalgebra::DVector::from_column_slice(&f);
            for k in 0..64 {
                assert!((a[k] - b[k]).abs() <= 1e-12);
                assert!((a[k] - rb.lambda_vec()[k] - c[k]).abs() <= 1e-12);
            }
        }
        assert!(rb.apply(&[0.0; 3]).is_err());
    }

    #[test]
    fn blocks_of_paired_halving() {
        let spec =
            RBSpec::constant(LocalIFS1D::paired_halving(8).unwrap(), &[0.1; 8], &[0.5; 8]).unwrap();
        let rb = assemble(&spec, &Grid::uniform(64)).unwrap();
        let bp = rb.block_partition().unwrap();
        assert_eq!(
            bp.maps,
            vec![vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]]
        );
        assert_eq!(bp.indices[1], (16..32).collect::<Vec<_>>());
    }

    #[test]
    fn binary_ifs_is_one_block() {
        let spec = RBSpec::constant(LocalIFS1D::binary(), &[0.1, 0.2], &[0.5, 0.5]).unwrap();
        let rb = assemble(&spec, &Grid::uniform(16)).unwrap();
        assert_eq!(rb.block_partition().unwrap().maps, vec![vec![0, 1]]);
    }

    #[test]
    fn hand_built_split_blocks() {
        // u_1 maps [0,1/3) onto itself; u_2 and u_3 share X = [1/3,1)
        let third = 1.0 / 3.0;
        let ifs = LocalIFS1D::new(
            Partition1D::new(vec![0.0, third, 2.0 * third, 1.0]).unwrap(),
            vec![
                Interval::new(0.0, third),
                Interval::new(third, 1.0),
                Interval::new(third, 1.0),
            ],
            vec![
                AffineMap1D::new(1.0, 0.0),
                AffineMap1D::new(0.5, third / 2.0),
                AffineMap1D::new(0.5, 0.5),
            ],
        )
        .unwrap();
        let spec = RBSpec::constant(ifs, &[1.0, 2.0, 3.0], &[0.5, 0.5, 0.5]).unwrap();
        let rb = assemble(&spec, &Grid::uniform(12)).unwrap();
        let bp = detect_local_refinement(&rb).unwrap();
        assert_eq!(bp.maps, vec![vec![0], vec![1, 2]]);
        let m = rb.to_dense();
        for &r in &bp.indices[0] {
            for &c in &bp.indices[1] {
                assert_eq!(m[(r, c)], 0.0);
                assert_eq!(m[(c, r)], 0.0);
            }
        }
    }

    #[test]
    fn inadmissible_grid_rejected() {
        let spec =
            RBSpec::constant(LocalIFS1D::paired_halving(8).unwrap(), &[0.0; 8], &[0.0; 8]).unwrap();
        assert!(matches!(
            assemble(&spec, &Grid::uniform(6)),
            Err(RbError::GridNotAdmissible(_))
        ));
    }
}
