use crate::error::{Error, Result};
use crate::matrix::dense::{gemm_acc, gemv_acc, identity, DenseLu};
use crate::matrix::BlockSparseMatrix;

/// Block ILU(0): `L` and `U` share the sparsity pattern of `A`, and the
/// diagonal blocks of `U` are inverted directly.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    b: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    /// Strictly lower blocks hold `L`, the rest hold `U`.
    factors: Vec<f64>,
    diag_pos: Vec<usize>,
    diag_inv: Vec<Vec<f64>>,
}

impl Ilu0 {
    pub fn factor(a: &BlockSparseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidMatrix("ILU(0) needs a square matrix".into()));
        }
        let n = a.nrows_blocks();
        let b = a.block_size();
        let bb = b * b;
        let row_offsets = a.row_offsets().to_vec();
        let col_indices = a.col_indices().to_vec();
        let mut f = a.blocks().to_vec();
        let mut diag_pos = vec![0; n];
        let mut diag_inv: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut col_pos = vec![usize::MAX; n];
        let mut tmp = vec![0.0; bb];

        for i in 0..n {
            let (start, end) = (row_offsets[i], row_offsets[i + 1]);
            for k in start..end {
                col_pos[col_indices[k]] = k;
            }
            diag_pos[i] = a.find(i, i).ok_or(Error::Singular { column: i * b })?;
            for kk in start..end {
                let k = col_indices[kk];
                if k >= i {
                    break;
                }
                // L_ik = A_ik U_kk⁻¹
                tmp.fill(0.0);
                gemm_acc(b, 1.0, &f[kk * bb..(kk + 1) * bb], &diag_inv[k], &mut tmp);
                f[kk * bb..(kk + 1) * bb].copy_from_slice(&tmp);
                for jj in diag_pos[k] + 1..row_offsets[k + 1] {
                    let pos = col_pos[col_indices[jj]];
                    if pos != usize::MAX {
                        let (lik, ukj) = (tmp.clone(), f[jj * bb..(jj + 1) * bb].to_vec());
                        gemm_acc(b, -1.0, &lik, &ukj, &mut f[pos * bb..(pos + 1) * bb]);
                    }
                }
            }
            let d = &f[diag_pos[i] * bb..(diag_pos[i] + 1) * bb];
            let lu = DenseLu::factor(b, d).map_err(|_| Error::Singular { column: i * b })?;
            diag_inv.push(lu.solve_matrix(&identity(b)));
            for k in start..end {
                col_pos[col_indices[k]] = usize::MAX;
            }
        }
        Ok(Self {
            b,
            row_offsets,
            col_indices,
            factors: f,
            diag_pos,
            diag_inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag_pos.len() * self.b
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (b, bb) = (self.b, self.b * self.b);
        let n = self.diag_pos.len();
        let mut acc = vec![0.0; b];
        for i in 0..n {
            acc.copy_from_slice(&x[i * b..(i + 1) * b]);
            for k in self.row_offsets[i]..self.diag_pos[i] {
                let c = self.col_indices[k];
                gemv_acc(b, -1.0, &self.factors[k * bb..(k + 1) * bb], &x[c * b..(c + 1) * b], &mut acc);
            }
            x[i * b..(i + 1) * b].copy_from_slice(&acc);
        }
        for i in (0..n).rev() {
            acc.copy_from_slice(&x[i * b..(i + 1) * b]);
            for k in self.diag_pos[i] + 1..self.row_offsets[i + 1] {
                let c = self.col_indices[k];
                gemv_acc(b, -1.0, &self.factors[k * bb..(k + 1) * bb], &x[c * b..(c + 1) * b], &mut acc);
            }
            let out = &mut x[i * b..(i + 1) * b];
            out.fill(0.0);
            gemv_acc(b, 1.0, &self.diag_inv[i], &acc, out);
        }
    }
}
