//! Exact sparse LU factorisation with partial pivoting.
//!
//! Left-looking (Gilbert–Peierls) factorisation of the scalar expansion of a
//! square block matrix. Block rows are first reordered symmetrically by
//! minimum degree on the cell graph, keeping the variables of each cell
//! contiguous. Row pivoting within each column selects the entry of largest
//! magnitude; ties go to the smallest row index, so factors are
//! bit-deterministic.

use super::ordering::minimum_degree;
use super::{BlockSparseMatrix, BlockVector};
use crate::error::{Error, Result};

/// Relative magnitude below which a pivot is treated as zero.
const PIVOT_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    block_size: usize,
    /// `col_perm[k]` = original scalar index placed at position `k`.
    col_perm: Vec<usize>,
    /// `pinv[i]` = pivot position of (symmetrically permuted) row `i`.
    pinv: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
}

impl SparseLu {
    pub fn factor(a: &BlockSparseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows_blocks(),
                actual: a.ncols_blocks(),
            });
        }
        let b = a.block_size();
        let nb = a.nrows_blocks();
        let n = nb * b;
        let cell_order = minimum_degree(&a.adjacency());
        let col_perm: Vec<usize> = cell_order.iter().flat_map(|&c| (0..b).map(move |k| c * b + k)).collect();
        let mut inv = vec![0usize; n];
        for (k, &g) in col_perm.iter().enumerate() {
            inv[g] = k;
        }

        // Permuted matrix C = A(q, q) in compressed column form.
        let (c_ptr, c_idx, c_val) = permuted_csc(a, &inv);

        let mut pinv = vec![usize::MAX; n];
        let mut l_ptr = Vec::with_capacity(n + 1);
        let mut u_ptr = Vec::with_capacity(n + 1);
        let nnz_guess = 4 * c_val.len();
        let mut l_idx = Vec::with_capacity(nnz_guess);
        let mut l_val = Vec::with_capacity(nnz_guess);
        let mut u_idx = Vec::with_capacity(nnz_guess);
        let mut u_val = Vec::with_capacity(nnz_guess);

        let mut x = vec![0.0f64; n];
        let mut xi = vec![0usize; n];
        let mut stack = Vec::new();
        let mut mark = vec![usize::MAX; n];

        for k in 0..n {
            l_ptr.push(l_idx.len());
            u_ptr.push(u_idx.len());

            let col = c_ptr[k]..c_ptr[k + 1];
            let top = reach(k, &c_idx[col.clone()], &l_ptr, &l_idx, &pinv, &mut xi, &mut mark, &mut stack);
            for p in col.clone() {
                x[c_idx[p]] = c_val[p];
            }
            let colmax = c_val[col].iter().fold(0.0f64, |m, v| m.max(v.abs()));

            for p in top..n {
                let j = xi[p];
                let jj = pinv[j];
                if jj == usize::MAX {
                    continue;
                }
                // L columns store the unit diagonal first
                let xj = x[j];
                if xj != 0.0 {
                    for q in l_ptr[jj] + 1..l_ptr[jj + 1] {
                        x[l_idx[q]] -= l_val[q] * xj;
                    }
                }
            }

            let mut ipiv = usize::MAX;
            let mut best = -1.0f64;
            for p in top..n {
                let i = xi[p];
                if pinv[i] == usize::MAX {
                    let v = x[i].abs();
                    if v > best || (v == best && i < ipiv) {
                        best = v;
                        ipiv = i;
                    }
                } else {
                    u_idx.push(pinv[i]);
                    u_val.push(x[i]);
                }
            }
            if ipiv == usize::MAX || !(best > PIVOT_TOLERANCE * colmax) || !best.is_finite() {
                return Err(Error::Singular { column: col_perm[k] });
            }
            let pivot = x[ipiv];
            u_idx.push(k);
            u_val.push(pivot);
            pinv[ipiv] = k;
            l_idx.push(ipiv);
            l_val.push(1.0);
            for p in top..n {
                let i = xi[p];
                if pinv[i] == usize::MAX {
                    l_idx.push(i);
                    l_val.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
        }
        l_ptr.push(l_idx.len());
        u_ptr.push(u_idx.len());
        for i in l_idx.iter_mut() {
            *i = pinv[*i];
        }

        Ok(Self {
            n,
            block_size: b,
            col_perm,
            pinv,
            l_ptr,
            l_idx,
            l_val,
            u_ptr,
            u_idx,
            u_val,
        })
    }

    /// Scalar dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// Stored entries in `L` and `U` combined.
    pub fn factor_nnz(&self) -> usize {
        self.l_val.len() + self.u_val.len()
    }

    pub fn solve(&self, y: &BlockVector) -> Result<BlockVector> {
        if y.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: y.len(),
            });
        }
        let mut x = y.as_slice().to_vec();
        self.solve_in_place(&mut x);
        BlockVector::new(self.block_size, x)
    }

    /// Overwrites `x` with `A⁻¹ x`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        let n = self.n;
        let mut w = vec![0.0; n];
        for i in 0..n {
            // row i of C is original row col_perm[i]
            w[self.pinv[i]] = x[self.col_perm[i]];
        }
        for j in 0..n {
            let wj = w[j];
            if wj != 0.0 {
                for p in self.l_ptr[j] + 1..self.l_ptr[j + 1] {
                    w[self.l_idx[p]] -= self.l_val[p] * wj;
                }
            }
        }
        for j in (0..n).rev() {
            let last = self.u_ptr[j + 1] - 1;
            let wj = w[j] / self.u_val[last];
            w[j] = wj;
            if wj != 0.0 {
                for p in self.u_ptr[j]..last {
                    w[self.u_idx[p]] -= self.u_val[p] * wj;
                }
            }
        }
        for k in 0..n {
            x[self.col_perm[k]] = w[k];
        }
    }

    /// Overwrites `x` with `A⁻ᵀ x`.
    pub fn solve_transpose_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        let n = self.n;
        let mut w: Vec<f64> = self.col_perm.iter().map(|&g| x[g]).collect();
        for j in 0..n {
            let last = self.u_ptr[j + 1] - 1;
            let mut s = w[j];
            for p in self.u_ptr[j]..last {
                s -= self.u_val[p] * w[self.u_idx[p]];
            }
            w[j] = s / self.u_val[last];
        }
        for j in (0..n).rev() {
            let mut s = w[j];
            for p in self.l_ptr[j] + 1..self.l_ptr[j + 1] {
                s -= self.l_val[p] * w[self.l_idx[p]];
            }
            w[j] = s;
        }
        for i in 0..n {
            x[self.col_perm[i]] = w[self.pinv[i]];
        }
    }
}

fn permuted_csc(a: &BlockSparseMatrix, inv: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let b = a.block_size();
    let n = a.nrows();
    let mut counts = vec![0usize; n + 1];
    for r in 0..a.nrows_blocks() {
        let (cols, _) = a.row(r);
        for &c in cols {
            for q in 0..b {
                counts[inv[c * b + q] + 1] += b;
            }
        }
    }
    for k in 0..n {
        counts[k + 1] += counts[k];
    }
    let ptr = counts.clone();
    let mut next = counts;
    let mut idx = vec![0usize; ptr[n]];
    let mut val = vec![0.0; ptr[n]];
    for r in 0..a.nrows_blocks() {
        let (cols, blks) = a.row(r);
        for (k, &c) in cols.iter().enumerate() {
            let blk = &blks[k * b * b..(k + 1) * b * b];
            for p in 0..b {
                for q in 0..b {
                    let col = inv[c * b + q];
                    let slot = next[col];
                    next[col] += 1;
                    idx[slot] = inv[r * b + p];
                    val[slot] = blk[p * b + q];
                }
            }
        }
    }
    // sort each column by row index for deterministic traversal
    let mut tmp: Vec<(usize, f64)> = Vec::new();
    for k in 0..n {
        tmp.clear();
        tmp.extend((ptr[k]..ptr[k + 1]).map(|p| (idx[p], val[p])));
        tmp.sort_by_key(|e| e.0);
        for (o, (i, v)) in tmp.iter().enumerate() {
            idx[ptr[k] + o] = *i;
            val[ptr[k] + o] = *v;
        }
    }
    (ptr, idx, val)
}

/// Nonzero pattern of `L \\ C(:,k)` in topological order, written to
/// `xi[top..n]`; returns `top`.
#[allow(clippy::too_many_arguments)]
fn reach(
    k: usize,
    rows: &[usize],
    l_ptr: &[usize],
    l_idx: &[usize],
    pinv: &[usize],
    xi: &mut [usize],
    mark: &mut [usize],
    stack: &mut Vec<(usize, usize)>,
) -> usize {
    let n = pinv.len();
    let first_child = |j: usize| if pinv[j] == usize::MAX { 0 } else { l_ptr[pinv[j]] + 1 };
    let mut top = n;
    for &start in rows {
        if mark[start] == k {
            continue;
        }
        mark[start] = k;
        stack.push((start, first_child(start)));
        while let Some(entry) = stack.last_mut() {
            let (j, mut p) = *entry;
            let end = if pinv[j] == usize::MAX { 0 } else { l_ptr[pinv[j] + 1] };
            let mut next = None;
            while p < end {
                let i = l_idx[p];
                p += 1;
                if mark[i] != k {
                    next = Some(i);
                    break;
                }
            }
            entry.1 = p;
            match next {
                Some(i) => {
                    mark[i] = k;
                    stack.push((i, first_child(i)));
                }
                None => {
                    stack.pop();
                    top -= 1;
                    xi[top] = j;
                }
            }
        }
    }
    top
}
