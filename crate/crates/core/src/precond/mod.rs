//! Preconditioners: approximations `z = M r ≈ A⁻¹ r`.
//!
//! Every variant is built once and is immutable afterwards; `apply` is
//! linear in `r` and bit-deterministic for any rayon pool size because
//! subdomain results are always combined in subdomain order.

mod ilu;
mod nested;
mod schwarz;

pub use ilu::Ilu0;
pub use nested::{axis_strengths, AxisOrder, NestedFactorisation, NfMode};
pub use schwarz::{AdditiveSchwarz, BoundaryConditioned, CoarseCorrection, Lsps};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{BlockSparseMatrix, BlockVector};

/// Factorisation used for each subdomain or reduced system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubdomainSolver {
    #[default]
    ExactLu,
    Ilu0,
}

#[derive(Debug, Clone)]
pub enum Preconditioner {
    Identity { n: usize },
    Ilu0(Ilu0),
    Nested(NestedFactorisation),
    Schwarz(AdditiveSchwarz),
    /// The coarse correction on its own.
    Coarse(CoarseCorrection),
    /// `B_AS⁻¹ r + B_C⁻¹ r`.
    TwoLevel { schwarz: AdditiveSchwarz, coarse: CoarseCorrection },
    /// `z₁ + B_C⁻¹ (r − A z₁)` with `z₁ = B_AS⁻¹ r`.
    TwoStage {
        schwarz: AdditiveSchwarz,
        coarse: CoarseCorrection,
        a: BlockSparseMatrix,
    },
    Lsps(Lsps),
    BoundaryConditioned(BoundaryConditioned),
}

impl Preconditioner {
    pub fn identity(n: usize) -> Self {
        Self::Identity { n }
    }

    pub fn two_stage(a: &BlockSparseMatrix, schwarz: AdditiveSchwarz, coarse: CoarseCorrection) -> Self {
        Self::TwoStage {
            schwarz,
            coarse,
            a: a.clone(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity { .. } => "identity",
            Self::Ilu0(_) => "ilu0",
            Self::Nested(_) => "nf",
            Self::Schwarz(s) if s.is_restricted() => "ras",
            Self::Schwarz(_) => "as",
            Self::Coarse(_) => "coarse",
            Self::TwoLevel { .. } => "as-2level",
            Self::TwoStage { .. } => "as-2stage",
            Self::Lsps(_) => "lsps",
            Self::BoundaryConditioned(_) => "bc",
        }
    }

    /// Mean dimension (in cells) of the systems solved per subdomain, or
    /// `None` for global preconditioners.
    pub fn mean_local_dim(&self) -> Option<f64> {
        match self {
            Self::Schwarz(s) | Self::TwoLevel { schwarz: s, .. } | Self::TwoStage { schwarz: s, .. } => Some(s.mean_local_dim()),
            Self::Lsps(l) => Some(l.mean_local_dim()),
            Self::BoundaryConditioned(bc) => Some(bc.mean_local_dim()),
            _ => None,
        }
    }

    pub fn apply(&self, r: &BlockVector) -> Result<BlockVector> {
        let mut z = vec![0.0; r.len()];
        self.apply_into(r.as_slice(), &mut z)?;
        BlockVector::new(r.block_size(), z)
    }

    /// `z = M r` on raw slices.
    pub fn apply_into(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        let n = self.dim();
        if r.len() != n || z.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: if r.len() != n { r.len() } else { z.len() },
            });
        }
        match self {
            Self::Identity { .. } => z.copy_from_slice(r),
            Self::Ilu0(f) => {
                z.copy_from_slice(r);
                f.solve_in_place(z);
            }
            Self::Nested(f) => {
                z.copy_from_slice(r);
                f.solve_in_place(z);
            }
            Self::Schwarz(s) => s.apply_into(r, z),
            Self::Coarse(c) => c.apply_into(r, z),
            Self::TwoLevel { schwarz, coarse } => {
                schwarz.apply_into(r, z);
                let mut zc = vec![0.0; n];
                coarse.apply_into(r, &mut zc);
                z.iter_mut().zip(&zc).for_each(|(a, b)| *a += b);
            }
            Self::TwoStage { schwarz, coarse, a } => {
                schwarz.apply_into(r, z);
                let mut r2 = vec![0.0; n];
                a.residual_into(r, z, &mut r2);
                let mut zc = vec![0.0; n];
                coarse.apply_into(&r2, &mut zc);
                z.iter_mut().zip(&zc).for_each(|(a, b)| *a += b);
            }
            Self::Lsps(l) => l.apply_into(r, z),
            Self::BoundaryConditioned(bc) => bc.apply_into(r, z),
        }
        Ok(())
    }

    /// Scalar dimension of the operator.
    pub fn dim(&self) -> usize {
        match self {
            Self::Identity { n } => *n,
            Self::Ilu0(f) => f.dim(),
            Self::Nested(f) => f.dim(),
            Self::Schwarz(s) => s.dim(),
            Self::Coarse(c) => c.dim(),
            Self::TwoLevel { schwarz, .. } | Self::TwoStage { schwarz, .. } => schwarz.dim(),
            Self::Lsps(l) => l.dim(),
            Self::BoundaryConditioned(bc) => bc.dim(),
        }
    }
}
