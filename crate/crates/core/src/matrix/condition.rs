use super::{norm2, BlockSparseMatrix, SparseLu};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 2000;
const REL_CHANGE: f64 = 1e-9;

/// 2-norm condition estimate `σ_max / σ_min`.
///
/// `σ_max` comes from power iteration on `AᵀA`, `σ_min` from inverse power
/// iteration through an exact factorisation of `A`.
pub fn estimate_condition(a: &BlockSparseMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows_blocks(),
            actual: a.ncols_blocks(),
        });
    }
    let n = a.nrows();
    if n == 0 {
        return Err(Error::InvalidMatrix("empty matrix".into()));
    }
    let lu = SparseLu::factor(a)?;
    let mut tmp = vec![0.0; n];

    let sigma_max_sq = power_iteration(n, |v, out| {
        a.matvec_into(v, &mut tmp);
        a.matvec_transpose_into(&tmp, out);
    });
    let inv_sigma_min_sq = power_iteration(n, |v, out| {
        out.copy_from_slice(v);
        lu.solve_transpose_in_place(out);
        lu.solve_in_place(out);
    });
    if !(inv_sigma_min_sq.is_finite() && inv_sigma_min_sq > 0.0) {
        return Err(Error::Singular { column: 0 });
    }
    Ok((sigma_max_sq * inv_sigma_min_sq).sqrt())
}

/// Dominant eigenvalue of a symmetric positive semidefinite operator.
fn power_iteration<F: FnMut(&[f64], &mut [f64])>(n: usize, mut apply: F) -> f64 {
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7).sin()).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERATIONS {
        apply(&v, &mut w);
        let next = super::dot(&v, &w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        if (next - lambda).abs() <= REL_CHANGE * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}
