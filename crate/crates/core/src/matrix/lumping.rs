//! Aggregation by a 0/1 lumping matrix `E` (one unit entry per fine column).
//!
//! `E a Eᵀ` sums every fine block `(i, j)` with `i ∈ I`, `j ∈ J` into coarse
//! block `(I, J)`. For `b ≥ 2` the sum is taken blockwise, so variable slots
//! are never mixed. Solving a lumped system zeroes the lumped residual.

use super::{BlockSparseMatrix, BlockVector};
use crate::error::{Error, Result};

/// Fine index → coarse group assignment. Every group is nonempty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LumpingMap {
    group_of: Vec<usize>,
    sizes: Vec<usize>,
}

impl LumpingMap {
    pub fn from_assignment(group_of: Vec<usize>, n_groups: usize) -> Result<Self> {
        let mut sizes = vec![0usize; n_groups];
        for (i, &g) in group_of.iter().enumerate() {
            if g >= n_groups {
                return Err(Error::InvalidLumping(format!(
                    "fine index {i} assigned to group {g}, but only {n_groups} groups exist"
                )));
            }
            sizes[g] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidLumping(format!("group {empty} is empty")));
        }
        Ok(Self { group_of, sizes })
    }

    /// Builds a map from explicit member lists. Every fine index in
    /// `0..n_fine` must appear in exactly one group.
    pub fn from_groups(n_fine: usize, groups: &[Vec<usize>]) -> Result<Self> {
        let mut group_of = vec![usize::MAX; n_fine];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::InvalidLumping(format!("group {g} is empty")));
            }
            for &i in members {
                if i >= n_fine {
                    return Err(Error::IndexOutOfRange { index: i, len: n_fine });
                }
                if group_of[i] != usize::MAX {
                    return Err(Error::InvalidLumping(format!(
                        "fine index {i} covered by groups {} and {g}",
                        group_of[i]
                    )));
                }
                group_of[i] = g;
            }
        }
        if let Some(i) = group_of.iter().position(|&g| g == usize::MAX) {
            return Err(Error::InvalidLumping(format!("fine index {i} is not covered")));
        }
        Self::from_assignment(group_of, groups.len())
    }

    pub fn identity(n: usize) -> Self {
        Self {
            group_of: (0..n).collect(),
            sizes: vec![1; n],
        }
    }

    pub fn n_fine(&self) -> usize {
        self.group_of.len()
    }

    pub fn n_coarse(&self) -> usize {
        self.sizes.len()
    }

    pub fn group_of(&self, i: usize) -> usize {
        self.group_of[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.group_of
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Member lists, each in increasing fine index order.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (i, &g) in self.group_of.iter().enumerate() {
            groups[g].push(i);
        }
        groups
    }

    pub fn is_identity(&self) -> bool {
        self.group_of.iter().enumerate().all(|(i, &g)| i == g)
    }

    /// `X = E x` on raw slices with `b` values per index.
    pub fn lump_into(&self, b: usize, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_fine() * b);
        debug_assert_eq!(out.len(), self.n_coarse() * b);
        out.fill(0.0);
        for (i, &g) in self.group_of.iter().enumerate() {
            for q in 0..b {
                out[g * b + q] += x[i * b + q];
            }
        }
    }

    /// `x = Eᵀ X` on raw slices with `b` values per index.
    pub fn prolong_into(&self, b: usize, coarse: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coarse.len(), self.n_coarse() * b);
        debug_assert_eq!(out.len(), self.n_fine() * b);
        for (i, &g) in self.group_of.iter().enumerate() {
            out[i * b..(i + 1) * b].copy_from_slice(&coarse[g * b..(g + 1) * b]);
        }
    }
}

pub fn lump_vector(map: &LumpingMap, x: &BlockVector) -> Result<BlockVector> {
    if x.nblocks() != map.n_fine() {
        return Err(Error::DimensionMismatch {
            expected: map.n_fine(),
            actual: x.nblocks(),
        });
    }
    let b = x.block_size();
    let mut out = vec![0.0; map.n_coarse() * b];
    map.lump_into(b, x.as_slice(), &mut out);
    BlockVector::new(b, out)
}

pub fn prolong_vector(map: &LumpingMap, coarse: &BlockVector) -> Result<BlockVector> {
    if coarse.nblocks() != map.n_coarse() {
        return Err(Error::DimensionMismatch {
            expected: map.n_coarse(),
            actual: coarse.nblocks(),
        });
    }
    let b = coarse.block_size();
    let mut out = vec![0.0; map.n_fine() * b];
    map.prolong_into(b, coarse.as_slice(), &mut out);
    BlockVector::new(b, out)
}

/// Galerkin lumping `E a Eᵀ`.
pub fn lump_matrix(map: &LumpingMap, a: &BlockSparseMatrix) -> Result<BlockSparseMatrix> {
    if !a.is_square() || a.nrows_blocks() != map.n_fine() {
        return Err(Error::DimensionMismatch {
            expected: map.n_fine(),
            actual: a.nrows_blocks(),
        });
    }
    let b = a.block_size();
    let bb = b * b;
    let groups = map.groups();
    let mut row_offsets = Vec::with_capacity(groups.len() + 1);
    let mut col_indices = Vec::new();
    let mut blocks = Vec::new();
    row_offsets.push(0);
    let mut entries: Vec<(usize, usize)> = Vec::new();
    for members in &groups {
        entries.clear();
        for &r in members {
            for k in a.row_offsets()[r]..a.row_offsets()[r + 1] {
                entries.push((map.group_of(a.col_indices()[k]), k));
            }
        }
        // stable: summation order is fixed by (fine row, storage position)
        entries.sort_by_key(|e| e.0);
        let mut i = 0;
        while i < entries.len() {
            let g = entries[i].0;
            let start = blocks.len();
            blocks.extend_from_slice(a.block_at(entries[i].1));
            i += 1;
            while i < entries.len() && entries[i].0 == g {
                let src = a.block_at(entries[i].1);
                for (d, s) in blocks[start..start + bb].iter_mut().zip(src) {
                    *d += s;
                }
                i += 1;
            }
            col_indices.push(g);
        }
        row_offsets.push(col_indices.len());
    }
    BlockSparseMatrix::new(groups.len(), groups.len(), b, row_offsets, col_indices, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense `E a Eᵀ` with explicit 0/1 `E`, scalar case.
    fn dense_triple_product(map: &LumpingMap, a: &[f64], n: usize) -> Vec<f64> {
        let m = map.n_coarse();
        let mut e = vec![0.0; m * n];
        for i in 0..n {
            e[map.group_of(i) * n + i] = 1.0;
        }
        let mut ea = vec![0.0; m * n];
        for r in 0..m {
            for k in 0..n {
                if e[r * n + k] != 0.0 {
                    for c in 0..n {
                        ea[r * n + c] += e[r * n + k] * a[k * n + c];
                    }
                }
            }
        }
        let mut out = vec![0.0; m * m];
        for r in 0..m {
            for c in 0..m {
                out[r * m + c] = (0..n).map(|k| ea[r * n + k] * e[c * n + k]).sum();
            }
        }
        out
    }

    fn random_sparse(rng: &mut ChaCha8Rng, n: usize, density: f64) -> BlockSparseMatrix {
        let trip: Vec<(usize, usize, f64)> = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .filter_map(|(r, c)| {
                (r == c || rng.gen::<f64>() < density).then(|| (r, c, rng.gen_range(-1.0..1.0)))
            })
            .collect();
        BlockSparseMatrix::from_scalar_triplets(n, n, 1, trip).unwrap()
    }

    fn random_map(rng: &mut ChaCha8Rng, n: usize, groups: usize) -> LumpingMap {
        let mut assign: Vec<usize> = (0..n).map(|i| if i < groups { i } else { rng.gen_range(0..groups) }).collect();
        // shuffle so the guaranteed members are not always the first indices
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            assign.swap(i, j);
        }
        LumpingMap::from_assignment(assign, groups).unwrap()
    }

    #[test]
    fn identity_map_leaves_matrix_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_sparse(&mut rng, 15, 0.2);
        assert_eq!(lump_matrix(&LumpingMap::identity(15), &a).unwrap(), a);
    }

    #[test]
    fn three_groups_of_three_on_identity() {
        let map = LumpingMap::from_groups(9, &[vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]]).unwrap();
        let lumped = lump_matrix(&map, &BlockSparseMatrix::identity(9, 1)).unwrap();
        assert_eq!(lumped.to_dense(), vec![3.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 3.0]);
    }

    #[test]
    fn lump_vector_sums_group_members() {
        let map = LumpingMap::from_groups(9, &[vec![0, 1, 2], vec![3, 4], vec![5, 6, 7, 8]]).unwrap();
        let x = BlockVector::from_elem(9, 1, 1.0);
        assert_eq!(lump_vector(&map, &x).unwrap().as_slice(), &[3.0, 2.0, 4.0]);
        let singles = LumpingMap::identity(4);
        let y = BlockVector::new(1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(lump_vector(&singles, &y).unwrap(), y);
    }

    #[test]
    fn prolong_replicates() {
        let map = LumpingMap::from_groups(3, &[vec![0, 1, 2]]).unwrap();
        let x = prolong_vector(&map, &BlockVector::new(1, vec![5.0]).unwrap()).unwrap();
        assert_eq!(x.as_slice(), &[5.0, 5.0, 5.0]);
        // lump ∘ prolong scales by group size
        let map = LumpingMap::from_groups(5, &[vec![0, 3], vec![1, 2, 4]]).unwrap();
        let coarse = BlockVector::new(2, vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        let back = lump_vector(&map, &prolong_vector(&map, &coarse).unwrap()).unwrap();
        assert_eq!(back.as_slice(), &[2.0, 4.0, -3.0, 1.5]);
    }

    #[test]
    fn invalid_maps_rejected() {
        assert!(matches!(
            LumpingMap::from_groups(3, &[vec![0, 1]]),
            Err(Error::InvalidLumping(_))
        ));
        assert!(matches!(
            LumpingMap::from_groups(3, &[vec![0, 1], vec![1, 2]]),
            Err(Error::InvalidLumping(_))
        ));
        assert!(LumpingMap::from_assignment(vec![0, 2], 3).is_err());
        assert!(LumpingMap::from_assignment(vec![0, 3], 3).is_err());
    }

    #[test]
    fn random_lumping_matches_dense_triple_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let a = random_sparse(&mut rng, 30, 0.15);
        let map = random_map(&mut rng, 30, 5);
        let lumped = lump_matrix(&map, &a).unwrap().to_dense();
        let oracle = dense_triple_product(&map, &a.to_dense(), 30);
        for (p, q) in lumped.iter().zip(&oracle) {
            assert!((p - q).abs() <= 1e-13);
        }
    }

    #[test]
    fn block_lumping_is_blockwise_sum() {
        let b = 2;
        let blk = |v: f64| vec![v, 10.0 * v, 100.0 * v, 1000.0 * v];
        let (b00, b01, b11, b20) = (blk(1.0), blk(2.0), blk(3.0), blk(4.0));
        let a = BlockSparseMatrix::from_block_triplets(
            3,
            3,
            b,
            vec![(0, 0, &b00[..]), (0, 1, &b01[..]), (1, 1, &b11[..]), (2, 0, &b20[..]), (2, 2, &b00[..])],
        )
        .unwrap();
        let map = LumpingMap::from_groups(3, &[vec![0, 1], vec![2]]).unwrap();
        let lumped = lump_matrix(&map, &a).unwrap();
        assert_eq!(lumped.block(0, 0).unwrap(), blk(6.0).as_slice());
        assert_eq!(lumped.block(1, 0).unwrap(), blk(4.0).as_slice());
        assert_eq!(lumped.block(1, 1).unwrap(), blk(1.0).as_slice());
        assert!(lumped.block(0, 1).is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn lumping_equals_dense_product(seed in any::<u64>(), n in 1usize..100, frac in 0.05f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let groups = ((n as f64 * frac).ceil() as usize).clamp(1, n);
            let a = random_sparse(&mut rng, n, 0.1);
            let map = random_map(&mut rng, n, groups);
            let lumped = lump_matrix(&map, &a).unwrap().to_dense();
            let oracle = dense_triple_product(&map, &a.to_dense(), n);
            for (p, q) in lumped.iter().zip(&oracle) {
                prop_assert!((p - q).abs() <= 1e-12);
            }
            prop_assert_eq!(map.group_sizes().iter().sum::<usize>(), n);
        }

        #[test]
        fn lump_vector_is_linear(seed in any::<u64>(), n in 1usize..80, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let map = random_map(&mut rng, n, (n / 3).max(1));
            let x: Vec<f64> = (0..n * 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..n * 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let comb: Vec<f64> = x.iter().zip(&y).map(|(p, q)| alpha * p + beta * q).collect();
            let lx = lump_vector(&map, &BlockVector::new(2, x).unwrap()).unwrap();
            let ly = lump_vector(&map, &BlockVector::new(2, y).unwrap()).unwrap();
            let lc = lump_vector(&map, &BlockVector::new(2, comb).unwrap()).unwrap();
            for i in 0..lc.len() {
                let expect = alpha * lx.as_slice()[i] + beta * ly.as_slice()[i];
                prop_assert!((lc.as_slice()[i] - expect).abs() <= 1e-12);
            }
        }
    }
}
