//! Block sparse storage, exact sparse factorisation and lumping.
//!
//! A [`BlockSparseMatrix`] holds dense `b×b` blocks in compressed row form.
//! Scalar matrices are the `b = 1` case. Block rows correspond to grid
//! cells throughout the crate; all `b` variables of a cell travel together.

pub mod condition;
pub mod dense;
pub mod lu;
pub mod lumping;
mod ordering;

use crate::error::{Error, Result};

pub use condition::estimate_condition;
pub use lu::SparseLu;
pub use lumping::{lump_matrix, lump_vector, prolong_vector, LumpingMap};

/// A real vector partitioned into blocks of `block_size` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    block_size: usize,
    values: Vec<f64>,
}

impl BlockVector {
    pub fn new(block_size: usize, values: Vec<f64>) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidMatrix("block size must be at least 1".into()));
        }
        if !values.len().is_multiple_of(block_size) {
            return Err(Error::DimensionMismatch {
                expected: values.len().next_multiple_of(block_size),
                actual: values.len(),
            });
        }
        Ok(Self { block_size, values })
    }

    pub fn zeros(nblocks: usize, block_size: usize) -> Self {
        Self {
            block_size,
            values: vec![0.0; nblocks * block_size],
        }
    }

    pub fn from_elem(nblocks: usize, block_size: usize, value: f64) -> Self {
        Self {
            block_size,
            values: vec![value; nblocks * block_size],
        }
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn nblocks(&self) -> usize {
        self.values.len() / self.block_size
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.values[i * self.block_size..(i + 1) * self.block_size]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.values)
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Sparse matrix of dense row-major `b×b` blocks in compressed row form.
///
/// Column indices are sorted and unique within each block row. Stored
/// all-zero blocks are kept as-is so sparsity patterns are reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSparseMatrix {
    nrows: usize,
    ncols: usize,
    block_size: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    blocks: Vec<f64>,
}

impl BlockSparseMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        block_size: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        blocks: Vec<f64>,
    ) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidMatrix("block size must be at least 1".into()));
        }
        if row_offsets.len() != nrows + 1 || row_offsets[0] != 0 {
            return Err(Error::InvalidMatrix(format!(
                "row_offsets must have length {} and start at 0",
                nrows + 1
            )));
        }
        if row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidMatrix("row_offsets must be nondecreasing".into()));
        }
        let nnzb = row_offsets[nrows];
        if col_indices.len() != nnzb || blocks.len() != nnzb * block_size * block_size {
            return Err(Error::InvalidMatrix(
                "col_indices/blocks length disagree with row_offsets".into(),
            ));
        }
        for r in 0..nrows {
            let cols = &col_indices[row_offsets[r]..row_offsets[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMatrix(format!(
                    "column indices of block row {r} are not sorted and unique"
                )));
            }
            if let Some(&c) = cols.last() {
                if c >= ncols {
                    return Err(Error::IndexOutOfRange { index: c, len: ncols });
                }
            }
        }
        Ok(Self {
            nrows,
            ncols,
            block_size,
            row_offsets,
            col_indices,
            blocks,
        })
    }

    /// Builds a matrix from `(block_row, block_col, block)` triplets.
    /// Duplicate positions are summed; explicit zero blocks are stored.
    pub fn from_block_triplets<'a, I>(
        nrows: usize,
        ncols: usize,
        block_size: usize,
        triplets: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, &'a [f64])>,
    {
        let bb = block_size * block_size;
        let mut rows: Vec<Vec<(usize, Vec<f64>)>> = vec![Vec::new(); nrows];
        for (r, c, blk) in triplets {
            if r >= nrows {
                return Err(Error::IndexOutOfRange { index: r, len: nrows });
            }
            if c >= ncols {
                return Err(Error::IndexOutOfRange { index: c, len: ncols });
            }
            if blk.len() != bb {
                return Err(Error::DimensionMismatch {
                    expected: bb,
                    actual: blk.len(),
                });
            }
            rows[r].push((c, blk.to_vec()));
        }
        Self::from_rows(nrows, ncols, block_size, rows)
    }

    /// Builds a block matrix from scalar `(row, col, value)` entries, grouping
    /// scalar indices into blocks by `index / block_size`.
    pub fn from_scalar_triplets<I>(
        nrows_blocks: usize,
        ncols_blocks: usize,
        block_size: usize,
        entries: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let b = block_size;
        let mut rows: Vec<Vec<(usize, Vec<f64>)>> = vec![Vec::new(); nrows_blocks];
        for (r, c, v) in entries {
            let (br, bc) = (r / b, c / b);
            if br >= nrows_blocks {
                return Err(Error::IndexOutOfRange {
                    index: r,
                    len: nrows_blocks * b,
                });
            }
            if bc >= ncols_blocks {
                return Err(Error::IndexOutOfRange {
                    index: c,
                    len: ncols_blocks * b,
                });
            }
            let mut blk = vec![0.0; b * b];
            blk[(r % b) * b + (c % b)] = v;
            rows[br].push((bc, blk));
        }
        Self::from_rows(nrows_blocks, ncols_blocks, block_size, rows)
    }

    fn from_rows(
        nrows: usize,
        ncols: usize,
        block_size: usize,
        mut rows: Vec<Vec<(usize, Vec<f64>)>>,
    ) -> Result<Self> {
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::new();
        let mut blocks = Vec::new();
        row_offsets.push(0);
        for row in rows.iter_mut() {
            // stable sort keeps duplicate summation order deterministic
            row.sort_by_key(|(c, _)| *c);
            let mut i = 0;
            while i < row.len() {
                let c = row[i].0;
                let start = blocks.len();
                blocks.extend_from_slice(&row[i].1);
                i += 1;
                while i < row.len() && row[i].0 == c {
                    for (dst, v) in blocks[start..].iter_mut().zip(&row[i].1) {
                        *dst += v;
                    }
                    i += 1;
                }
                col_indices.push(c);
            }
            row_offsets.push(col_indices.len());
        }
        Self::new(nrows, ncols, block_size, row_offsets, col_indices, blocks)
    }

    /// Dense row-major scalar matrix to block form; only blocks with at least
    /// one nonzero entry are stored.
    pub fn from_dense(nrows_blocks: usize, ncols_blocks: usize, block_size: usize, dense: &[f64]) -> Result<Self> {
        let b = block_size;
        let ncols = ncols_blocks * b;
        if dense.len() != nrows_blocks * b * ncols {
            return Err(Error::DimensionMismatch {
                expected: nrows_blocks * b * ncols,
                actual: dense.len(),
            });
        }
        let mut row_offsets = vec![0];
        let mut col_indices = Vec::new();
        let mut blocks = Vec::new();
        for br in 0..nrows_blocks {
            for bc in 0..ncols_blocks {
                let mut blk = vec![0.0; b * b];
                for i in 0..b {
                    for j in 0..b {
                        blk[i * b + j] = dense[(br * b + i) * ncols + bc * b + j];
                    }
                }
                if blk.iter().any(|v| *v != 0.0) {
                    col_indices.push(bc);
                    blocks.extend(blk);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Self::new(nrows_blocks, ncols_blocks, b, row_offsets, col_indices, blocks)
    }

    pub fn identity(n: usize, block_size: usize) -> Self {
        let eye = dense::identity(block_size);
        let blocks = (0..n).flat_map(|_| eye.iter().copied()).collect();
        Self {
            nrows: n,
            ncols: n,
            block_size,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            blocks,
        }
    }

    pub fn nrows_blocks(&self) -> usize {
        self.nrows
    }

    pub fn ncols_blocks(&self) -> usize {
        self.ncols
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// Scalar row count.
    pub fn nrows(&self) -> usize {
        self.nrows * self.block_size
    }

    /// Scalar column count.
    pub fn ncols(&self) -> usize {
        self.ncols * self.block_size
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn nnz_blocks(&self) -> usize {
        self.col_indices.len()
    }

    /// Number of stored scalar entries, counting every entry of every stored block.
    pub fn nnz(&self) -> usize {
        self.col_indices.len() * self.block_size * self.block_size
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn blocks(&self) -> &[f64] {
        &self.blocks
    }

    /// Column indices and the flat block storage of block row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_offsets[r], self.row_offsets[r + 1]);
        let bb = self.block_size * self.block_size;
        (&self.col_indices[s..e], &self.blocks[s * bb..e * bb])
    }

    pub fn block_at(&self, k: usize) -> &[f64] {
        let bb = self.block_size * self.block_size;
        &self.blocks[k * bb..(k + 1) * bb]
    }

    /// Storage position of block `(r, c)` if it is stored.
    pub fn find(&self, r: usize, c: usize) -> Option<usize> {
        let (s, e) = (self.row_offsets[r], self.row_offsets[r + 1]);
        self.col_indices[s..e].binary_search(&c).ok().map(|k| s + k)
    }

    pub fn block(&self, r: usize, c: usize) -> Option<&[f64]> {
        self.find(r, c).map(|k| self.block_at(k))
    }

    /// Largest absolute stored entry.
    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn matvec(&self, x: &BlockVector) -> Result<BlockVector> {
        if x.len() != self.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.ncols(),
                actual: x.len(),
            });
        }
        let mut y = vec![0.0; self.nrows()];
        self.matvec_into(x.as_slice(), &mut y);
        Ok(BlockVector {
            block_size: self.block_size,
            values: y,
        })
    }

    /// `y = A x` on raw scalar slices. Lengths must match.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols());
        debug_assert_eq!(y.len(), self.nrows());
        let b = self.block_size;
        let bb = b * b;
        for r in 0..self.nrows {
            let yr = &mut y[r * b..(r + 1) * b];
            yr.fill(0.0);
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                let c = self.col_indices[k];
                dense::gemv_acc(b, 1.0, &self.blocks[k * bb..(k + 1) * bb], &x[c * b..(c + 1) * b], yr);
            }
        }
    }

    /// `y = Aᵀ x` on raw scalar slices.
    pub fn matvec_transpose_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows());
        debug_assert_eq!(y.len(), self.ncols());
        let b = self.block_size;
        let bb = b * b;
        y.fill(0.0);
        for r in 0..self.nrows {
            let xr = &x[r * b..(r + 1) * b];
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                let c = self.col_indices[k];
                dense::gemv_t_acc(b, 1.0, &self.blocks[k * bb..(k + 1) * bb], xr, &mut y[c * b..(c + 1) * b]);
            }
        }
    }

    /// `r = rhs - A x`.
    pub fn residual_into(&self, rhs: &[f64], x: &[f64], r: &mut [f64]) {
        self.matvec_into(x, r);
        for (ri, bi) in r.iter_mut().zip(rhs) {
            *ri = bi - *ri;
        }
    }

    /// Dense row-major scalar expansion.
    pub fn to_dense(&self) -> Vec<f64> {
        let b = self.block_size;
        let ncols = self.ncols();
        let mut d = vec![0.0; self.nrows() * ncols];
        for r in 0..self.nrows {
            let (cols, blks) = self.row(r);
            for (k, &c) in cols.iter().enumerate() {
                for i in 0..b {
                    for j in 0..b {
                        d[(r * b + i) * ncols + c * b + j] += blks[k * b * b + i * b + j];
                    }
                }
            }
        }
        d
    }

    pub fn transpose(&self) -> Self {
        let b = self.block_size;
        let trip: Vec<(usize, usize, Vec<f64>)> = (0..self.nrows)
            .flat_map(|r| {
                let (cols, blks) = self.row(r);
                cols.iter()
                    .enumerate()
                    .map(move |(k, &c)| (c, r, dense::transpose(b, &blks[k * b * b..(k + 1) * b * b])))
                    .collect::<Vec<_>>()
            })
            .collect();
        Self::from_block_triplets(self.ncols, self.nrows, b, trip.iter().map(|(r, c, v)| (*r, *c, v.as_slice())))
            .expect("transpose of a valid matrix is valid")
    }

    /// Principal submatrix on the given block rows, in the order given.
    pub fn extract_principal_submatrix(&self, rows: &[usize]) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::InvalidMatrix("principal submatrix of a non-square matrix".into()));
        }
        let n = self.nrows;
        let mut local = vec![usize::MAX; n];
        for (li, &g) in rows.iter().enumerate() {
            if g >= n {
                return Err(Error::IndexOutOfRange { index: g, len: n });
            }
            if local[g] != usize::MAX {
                return Err(Error::InvalidMatrix(format!("row {g} selected twice")));
            }
            local[g] = li;
        }
        let b = self.block_size;
        let bb = b * b;
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        let mut col_indices = Vec::new();
        let mut blocks = Vec::new();
        row_offsets.push(0);
        let mut scratch: Vec<(usize, usize)> = Vec::new();
        for &g in rows {
            scratch.clear();
            for k in self.row_offsets[g]..self.row_offsets[g + 1] {
                let lc = local[self.col_indices[k]];
                if lc != usize::MAX {
                    scratch.push((lc, k));
                }
            }
            scratch.sort_unstable();
            for &(lc, k) in &scratch {
                col_indices.push(lc);
                blocks.extend_from_slice(&self.blocks[k * bb..(k + 1) * bb]);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            nrows: rows.len(),
            ncols: rows.len(),
            block_size: b,
            row_offsets,
            col_indices,
            blocks,
        })
    }

    /// Block-cell adjacency lists (pattern of `A + Aᵀ`, diagonal excluded).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.nrows];
        for r in 0..self.nrows {
            for &c in &self.col_indices[self.row_offsets[r]..self.row_offsets[r + 1]] {
                if c != r {
                    adj[r].push(c);
                    adj[c].push(r);
                }
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }
}
