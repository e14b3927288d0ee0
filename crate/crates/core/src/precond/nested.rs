//! Nested factorisation for hepta-banded block matrices.
//!
//! With cells reordered so the inner axis runs fastest,
//! `A = D + L₁ + U₁ + L₂ + U₂ + L₃ + U₃` and
//!
//! ```text
//! B = (P + L₃)(I + P⁻¹U₃),  P = (T + L₂)(I + T⁻¹U₂),  T = (G + L₁)(I + G⁻¹U₁)
//! ```
//!
//! with `G` block diagonal. The error is
//! `B − A = G − D + L₁G⁻¹U₁ + L₂T⁻¹U₂ + L₃P⁻¹U₃`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::StructuredGrid;
use crate::matrix::dense::{gemm_acc, gemv_acc, gemv_t_acc, DenseLu};
use crate::matrix::BlockSparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NfMode {
    /// `G = D − L₁G⁻¹U₁`.
    #[default]
    InnerBandExact,
    /// `G = D − L₁G⁻¹U₁ − colsum(L₂T⁻¹U₂) − colsum(L₃P⁻¹U₃)`, so every
    /// block column of `B − A` sums to zero.
    ColumnSum,
}

/// Which grid axes play the inner, middle and outer band roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AxisOrder {
    /// Inner axis = strongest average coupling; the rest by decreasing
    /// strength, ties to the lower axis.
    #[default]
    Auto,
    Explicit([usize; 3]),
}

#[derive(Debug, Clone)]
pub struct NestedFactorisation {
    b: usize,
    mode: NfMode,
    axes: [usize; 3],
    /// Extents along the permuted axes.
    dims: [usize; 3],
    /// Permuted position → natural cell index.
    cell_of: Vec<usize>,
    /// `lower[l][p]` couples `p` to `p − stride_l`, `upper[l][p]` couples
    /// `p − stride_l` to `p` (zero blocks at boundaries).
    lower: [Vec<f64>; 3],
    upper: [Vec<f64>; 3],
    diag: Vec<f64>,
    g: Vec<DenseLu>,
    g_blocks: Vec<f64>,
}

/// Mean Frobenius norm of the off-diagonal blocks coupling along each axis.
pub fn axis_strengths(a: &BlockSparseMatrix, grid: &StructuredGrid) -> [f64; 3] {
    let mut sum = [0.0; 3];
    let mut count = [0usize; 3];
    for r in 0..a.nrows_blocks() {
        let rc = grid.coords(r);
        let (cols, _) = a.row(r);
        for (k, &c) in cols.iter().enumerate() {
            let cc = grid.coords(c);
            let diff: Vec<usize> = (0..3).filter(|&d| rc[d] != cc[d]).collect();
            if diff.len() == 1 && rc[diff[0]].abs_diff(cc[diff[0]]) == 1 {
                let blk = a.block_at(a.row_offsets()[r] + k);
                sum[diff[0]] += blk.iter().map(|v| v * v).sum::<f64>().sqrt();
                count[diff[0]] += 1;
            }
        }
    }
    let mut out = [0.0; 3];
    for d in 0..3 {
        if count[d] > 0 {
            out[d] = sum[d] / count[d] as f64;
        }
    }
    out
}

fn resolve_axes(order: AxisOrder, a: &BlockSparseMatrix, grid: &StructuredGrid) -> Result<[usize; 3]> {
    match order {
        AxisOrder::Explicit(ax) => {
            let mut s = ax;
            s.sort_unstable();
            if s != [0, 1, 2] {
                return Err(Error::InvalidSpec(format!("axis order {ax:?} is not a permutation of 0,1,2")));
            }
            Ok(ax)
        }
        AxisOrder::Auto => {
            let st = axis_strengths(a, grid);
            let mut ax = [0, 1, 2];
            ax.sort_by(|&x, &y| st[y].partial_cmp(&st[x]).unwrap_or(std::cmp::Ordering::Equal));
            Ok(ax)
        }
    }
}

impl NestedFactorisation {
    pub fn factor(a: &BlockSparseMatrix, grid: &StructuredGrid, mode: NfMode, order: AxisOrder) -> Result<Self> {
        let n = grid.n_cells();
        if !a.is_square() || a.nrows_blocks() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: a.nrows_blocks(),
            });
        }
        let axes = resolve_axes(order, a, grid)?;
        let gd = grid.dims();
        let dims = [gd[axes[0]], gd[axes[1]], gd[axes[2]]];
        let strides = [1, dims[0], dims[0] * dims[1]];
        let b = a.block_size();
        let bb = b * b;

        let mut cell_of = vec![0; n];
        let mut pos_of = vec![0; n];
        for (cell, slot) in pos_of.iter_mut().enumerate() {
            let c = grid.coords(cell);
            let p = c[axes[0]] + dims[0] * (c[axes[1]] + dims[1] * c[axes[2]]);
            *slot = p;
            cell_of[p] = cell;
        }

        let mut diag = vec![0.0; n * bb];
        let mut lower = [vec![0.0; n * bb], vec![0.0; n * bb], vec![0.0; n * bb]];
        let mut upper = [vec![0.0; n * bb], vec![0.0; n * bb], vec![0.0; n * bb]];
        for r in 0..n {
            let pr = pos_of[r];
            let (cols, blocks) = a.row(r);
            for (k, &c) in cols.iter().enumerate() {
                let blk = &blocks[k * bb..(k + 1) * bb];
                let pc = pos_of[c];
                let band = if pr == pc {
                    None
                } else {
                    let (rc, cc) = (grid.coords(r), grid.coords(c));
                    let diff: Vec<usize> = (0..3).filter(|&d| rc[d] != cc[d]).collect();
                    if diff.len() == 1 && rc[diff[0]].abs_diff(cc[diff[0]]) == 1 {
                        Some(axes.iter().position(|&x| x == diff[0]).unwrap())
                    } else {
                        if blk.iter().any(|&v| v != 0.0) {
                            return Err(Error::NotHeptaBanded(format!("nonzero block at cells ({r}, {c})")));
                        }
                        continue;
                    }
                };
                match band {
                    None => diag[pr * bb..(pr + 1) * bb].copy_from_slice(blk),
                    Some(l) if pr > pc => lower[l][pr * bb..(pr + 1) * bb].copy_from_slice(blk),
                    Some(l) => upper[l][pc * bb..(pc + 1) * bb].copy_from_slice(blk),
                }
            }
        }
        debug_assert!(strides[2] * dims[2] == n);

        let mut nf = Self {
            b,
            mode,
            axes,
            dims,
            cell_of,
            lower,
            upper,
            diag,
            g: Vec::with_capacity(n),
            g_blocks: Vec::with_capacity(n * bb),
        };
        nf.build_g()?;
        Ok(nf)
    }

    fn build_g(&mut self) -> Result<()> {
        let (b, bb) = (self.b, self.b * self.b);
        let [n1, n2, n3] = self.dims;
        let plane = n1 * n2;
        let mut s3 = vec![0.0; plane * bb];
        let mut s2 = vec![0.0; n1 * bb];
        for k in 0..n3 {
            s3.fill(0.0);
            if self.mode == NfMode::ColumnSum && k > 0 {
                self.column_sums(2, (k - 1) * plane, &mut s3);
            }
            for j in 0..n2 {
                let line = k * plane + j * n1;
                s2.fill(0.0);
                if self.mode == NfMode::ColumnSum && j > 0 {
                    self.column_sums(1, line - n1, &mut s2);
                }
                for i in 0..n1 {
                    let p = line + i;
                    let mut gp = self.diag[p * bb..(p + 1) * bb].to_vec();
                    if i > 0 {
                        // L₁G⁻¹U₁ at (p, p): l1[p] · G_{p−1}⁻¹ · u1[p]
                        let ginv_u = self.g[p - 1].solve_matrix(&self.upper[0][p * bb..(p + 1) * bb]);
                        gemm_acc(b, -1.0, &self.lower[0][p * bb..(p + 1) * bb], &ginv_u, &mut gp);
                    }
                    for q in 0..bb {
                        gp[q] -= s2[i * bb + q] + s3[(j * n1 + i) * bb + q];
                    }
                    let lu = DenseLu::factor(b, &gp).map_err(|_| Error::Singular {
                        column: self.cell_of[p] * b,
                    })?;
                    self.g.push(lu);
                    self.g_blocks.extend_from_slice(&gp);
                }
            }
        }
        Ok(())
    }

    /// Block column sums of `L_{l+1} S⁻¹ U_{l+1}` over the segment that
    /// follows the level-`level` segment starting at `start` (whose `S` is
    /// already factored). Row `i` of `out` is the sum for the `i`-th cell of
    /// the following segment.
    fn column_sums(&self, level: usize, start: usize, out: &mut [f64]) {
        let (b, bb) = (self.b, self.b * self.b);
        let size = self.segment_len(level);
        let stride = size;
        let low = &self.lower[level];
        let up = &self.upper[level];
        // X_{c} = Σ_r L_{r,r−}(S⁻¹)_{r−,c}: row e of X comes from Sᵀ x = (row e of L_{r,r−})ᵀ.
        let mut x = vec![0.0; size * bb];
        let mut rhs = vec![0.0; size * b];
        for e in 0..b {
            for c in 0..size {
                let r = start + c + stride;
                rhs[c * b..(c + 1) * b].copy_from_slice(&low[r * bb + e * b..r * bb + (e + 1) * b]);
            }
            self.solve_t_level(level, start, &mut rhs);
            for c in 0..size {
                x[c * bb + e * b..c * bb + (e + 1) * b].copy_from_slice(&rhs[c * b..(c + 1) * b]);
            }
        }
        for c in 0..size {
            let col = start + c + stride;
            gemm_acc(b, 1.0, &x[c * bb..(c + 1) * bb], &up[col * bb..(col + 1) * bb], &mut out[c * bb..(c + 1) * bb]);
        }
    }

    /// Number of cells in a level-`level` segment (0: cell, 1: line, 2: plane, 3: all).
    fn segment_len(&self, level: usize) -> usize {
        self.dims[..level].iter().product()
    }

    /// In-place solve with the level-`level` factor on cells `start..start+len`.
    fn solve_level(&self, level: usize, start: usize, v: &mut [f64]) {
        let b = self.b;
        if level == 0 {
            self.g[start].solve_in_place(v);
            return;
        }
        let bb = b * b;
        let sub = self.segment_len(level - 1);
        let count = self.dims[level - 1];
        let low = &self.lower[level - 1];
        let up = &self.upper[level - 1];
        for m in 0..count {
            if m > 0 {
                let (prev, cur) = v.split_at_mut(m * sub * b);
                let prev = &prev[(m - 1) * sub * b..];
                for c in 0..sub {
                    let p = start + m * sub + c;
                    gemv_acc(b, -1.0, &low[p * bb..(p + 1) * bb], &prev[c * b..(c + 1) * b], &mut cur[c * b..(c + 1) * b]);
                }
            }
            self.solve_level(level - 1, start + m * sub, &mut v[m * sub * b..(m + 1) * sub * b]);
        }
        let mut t = vec![0.0; sub * b];
        for m in (0..count.saturating_sub(1)).rev() {
            t.fill(0.0);
            let next = &v[(m + 1) * sub * b..(m + 2) * sub * b];
            for c in 0..sub {
                let p = start + (m + 1) * sub + c;
                gemv_acc(b, 1.0, &up[p * bb..(p + 1) * bb], &next[c * b..(c + 1) * b], &mut t[c * b..(c + 1) * b]);
            }
            self.solve_level(level - 1, start + m * sub, &mut t);
            for (x, y) in v[m * sub * b..(m + 1) * sub * b].iter_mut().zip(&t) {
                *x -= y;
            }
        }
    }

    /// In-place solve with the transpose of the level-`level` factor.
    fn solve_t_level(&self, level: usize, start: usize, v: &mut [f64]) {
        let b = self.b;
        if level == 0 {
            self.g[start].solve_transpose_in_place(v);
            return;
        }
        let bb = b * b;
        let sub = self.segment_len(level - 1);
        let count = self.dims[level - 1];
        let low = &self.lower[level - 1];
        let up = &self.upper[level - 1];
        // (I + Uᵀ S⁻ᵀ) w = y, forward over segments
        let mut q = vec![0.0; sub * b];
        for m in 1..count {
            q.copy_from_slice(&v[(m - 1) * sub * b..m * sub * b]);
            self.solve_t_level(level - 1, start + (m - 1) * sub, &mut q);
            let cur = &mut v[m * sub * b..(m + 1) * sub * b];
            for c in 0..sub {
                let p = start + m * sub + c;
                gemv_t_acc(b, -1.0, &up[p * bb..(p + 1) * bb], &q[c * b..(c + 1) * b], &mut cur[c * b..(c + 1) * b]);
            }
        }
        // (Sᵀ + Lᵀ) x = w, backward over segments
        for m in (0..count).rev() {
            if m + 1 < count {
                let (cur, next) = v.split_at_mut((m + 1) * sub * b);
                let cur = &mut cur[m * sub * b..];
                for c in 0..sub {
                    let p = start + (m + 1) * sub + c;
                    gemv_t_acc(b, -1.0, &low[p * bb..(p + 1) * bb], &next[c * b..(c + 1) * b], &mut cur[c * b..(c + 1) * b]);
                }
            }
            self.solve_t_level(level - 1, start + m * sub, &mut v[m * sub * b..(m + 1) * sub * b]);
        }
    }

    /// `y = F x` for the level-`level` factor on one segment (`F = B` at level 3).
    fn multiply_level(&self, level: usize, start: usize, x: &[f64], y: &mut [f64]) {
        let b = self.b;
        let bb = b * b;
        if level == 0 {
            y.fill(0.0);
            gemv_acc(b, 1.0, &self.g_blocks[start * bb..(start + 1) * bb], x, y);
            return;
        }
        // F = S + L + U + L S⁻¹ U with S the block-diagonal of sub-factors.
        let sub = self.segment_len(level - 1);
        let count = self.dims[level - 1];
        let low = &self.lower[level - 1];
        let up = &self.upper[level - 1];
        let seg = sub * b;
        let mut t = vec![0.0; seg];
        for m in 0..count {
            let s0 = start + m * sub;
            self.multiply_level(level - 1, s0, &x[m * seg..(m + 1) * seg], &mut y[m * seg..(m + 1) * seg]);
            if m > 0 {
                // L x_{m−1} + L S_{m−1}⁻¹ U x_m
                t.fill(0.0);
                for c in 0..sub {
                    let p = s0 + c;
                    gemv_acc(b, 1.0, &up[p * bb..(p + 1) * bb], &x[m * seg + c * b..m * seg + (c + 1) * b], &mut t[c * b..(c + 1) * b]);
                }
                self.solve_level(level - 1, s0 - sub, &mut t);
                for (tv, xv) in t.iter_mut().zip(&x[(m - 1) * seg..m * seg]) {
                    *tv += xv;
                }
                for c in 0..sub {
                    let p = s0 + c;
                    gemv_acc(b, 1.0, &low[p * bb..(p + 1) * bb], &t[c * b..(c + 1) * b], &mut y[m * seg + c * b..m * seg + (c + 1) * b]);
                }
            }
            if m + 1 < count {
                for c in 0..sub {
                    let p = s0 + sub + c;
                    let (xs, ys) = (&x[(m + 1) * seg + c * b..(m + 1) * seg + (c + 1) * b], &mut y[m * seg + c * b..m * seg + (c + 1) * b]);
                    gemv_acc(b, 1.0, &up[p * bb..(p + 1) * bb], xs, ys);
                }
            }
        }
    }

    fn permute_in(&self, x: &[f64], out: &mut [f64]) {
        let b = self.b;
        for (p, &c) in self.cell_of.iter().enumerate() {
            out[p * b..(p + 1) * b].copy_from_slice(&x[c * b..(c + 1) * b]);
        }
    }

    fn permute_out(&self, x: &[f64], out: &mut [f64]) {
        let b = self.b;
        for (p, &c) in self.cell_of.iter().enumerate() {
            out[c * b..(c + 1) * b].copy_from_slice(&x[p * b..(p + 1) * b]);
        }
    }

    pub fn dim(&self) -> usize {
        self.cell_of.len() * self.b
    }

    pub fn mode(&self) -> NfMode {
        self.mode
    }

    /// Grid axes in inner, middle, outer order.
    pub fn axes(&self) -> [usize; 3] {
        self.axes
    }

    /// `x ← B⁻¹ x` in natural cell order.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let mut w = vec![0.0; x.len()];
        self.permute_in(x, &mut w);
        self.solve_level(3, 0, &mut w);
        self.permute_out(&w, x);
    }

    /// `B x` in natural cell order, evaluated from the factored form.
    pub fn multiply(&self, x: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; x.len()];
        let mut y = vec![0.0; x.len()];
        self.permute_in(x, &mut w);
        self.multiply_level(3, 0, &w, &mut y);
        let mut out = vec![0.0; x.len()];
        self.permute_out(&y, &mut out);
        out
    }
}
