//! Small dense kernels for the b×b blocks of a block sparse matrix.
//!
//! Blocks are stored row-major as flat slices of length `b*b`.

use crate::error::{Error, Result};

/// `y += alpha * A x` for a row-major `b×b` block.
#[inline]
pub fn gemv_acc(b: usize, alpha: f64, a: &[f64], x: &[f64], y: &mut [f64]) {
    for r in 0..b {
        let row = &a[r * b..(r + 1) * b];
        let mut s = 0.0;
        for c in 0..b {
            s += row[c] * x[c];
        }
        y[r] += alpha * s;
    }
}

/// `y += alpha * Aᵀ x` for a row-major `b×b` block.
#[inline]
pub fn gemv_t_acc(b: usize, alpha: f64, a: &[f64], x: &[f64], y: &mut [f64]) {
    for r in 0..b {
        let xr = alpha * x[r];
        let row = &a[r * b..(r + 1) * b];
        for c in 0..b {
            y[c] += row[c] * xr;
        }
    }
}

/// `C += alpha * A B` for row-major `b×b` blocks.
pub fn gemm_acc(b: usize, alpha: f64, a: &[f64], bm: &[f64], c: &mut [f64]) {
    for i in 0..b {
        for k in 0..b {
            let aik = alpha * a[i * b + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..b {
                c[i * b + j] += aik * bm[k * b + j];
            }
        }
    }
}

pub fn transpose(b: usize, a: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; b * b];
    for i in 0..b {
        for j in 0..b {
            t[j * b + i] = a[i * b + j];
        }
    }
    t
}

pub fn identity(b: usize) -> Vec<f64> {
    let mut m = vec![0.0; b * b];
    for i in 0..b {
        m[i * b + i] = 1.0;
    }
    m
}

/// LU factorisation of a small dense square matrix with partial pivoting.
///
/// Ties in pivot magnitude go to the smallest row index.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(n: usize, a: &[f64]) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for r in k + 1..n {
                let v = lu[r * n + k].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() || best <= scale * f64::EPSILON {
                return Err(Error::Singular { column: k });
            }
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] / pivot;
                lu[r * n + k] = f;
                if f != 0.0 {
                    for c in k + 1..n {
                        lu[r * n + c] -= f * lu[k * n + c];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = y` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        let mut tmp = [0.0f64; 8];
        let mut heap;
        let buf: &mut [f64] = if n <= 8 {
            &mut tmp[..n]
        } else {
            heap = vec![0.0; n];
            &mut heap
        };
        for i in 0..n {
            buf[i] = x[self.perm[i]];
        }
        for i in 0..n {
            let mut s = buf[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * buf[j];
            }
            buf[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = buf[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * buf[j];
            }
            buf[i] = s / self.lu[i * n + i];
        }
        x[..n].copy_from_slice(buf);
    }

    /// Solves `Aᵀ x = y` in place.
    pub fn solve_transpose_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        let mut buf = x[..n].to_vec();
        // Uᵀ w = y
        for i in 0..n {
            let mut s = buf[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * buf[j];
            }
            buf[i] = s / self.lu[i * n + i];
        }
        // Lᵀ v = w
        for i in (0..n).rev() {
            let mut s = buf[i];
            for j in i + 1..n {
                s -= self.lu[j * n + i] * buf[j];
            }
            buf[i] = s;
        }
        for i in 0..n {
            x[self.perm[i]] = buf[i];
        }
    }

    /// Returns `A⁻¹ M` for a row-major `n×n` matrix `M`.
    pub fn solve_matrix(&self, m: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                col[i] = m[i * n + j];
            }
            self.solve_in_place(&mut col);
            for i in 0..n {
                out[i * n + j] = col[i];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_pivoted_system() {
        // needs a row swap at the first step
        let a = [0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 2.0, 0.0, 3.0];
        let lu = DenseLu::factor(3, &a).unwrap();
        let x_true = [1.0, -2.0, 0.5];
        let mut y = [0.0; 3];
        gemv_acc(3, 1.0, &a, &x_true, &mut y);
        lu.solve_in_place(&mut y);
        for i in 0..3 {
            assert!((y[i] - x_true[i]).abs() < 1e-14);
        }
        let mut yt = [0.0; 3];
        gemv_t_acc(3, 1.0, &a, &x_true, &mut yt);
        lu.solve_transpose_in_place(&mut yt);
        for i in 0..3 {
            assert!((yt[i] - x_true[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_singular() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(matches!(DenseLu::factor(2, &a), Err(Error::Singular { .. })));
    }
}
