//! Test problems: Matrix Market ingestion/export, right-hand sides, and a
//! seeded generator of reservoir-style hepta-banded block matrices.

mod generator;
mod mtx;

pub use generator::{generate_reservoir_matrix, GeneratorSpec};
pub use mtx::{read_matrix_market, read_matrix_market_from, write_matrix_market, write_matrix_market_to};

use crate::error::{Error, Result};
use crate::grid::StructuredGrid;
use crate::matrix::{BlockSparseMatrix, BlockVector};

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub matrix: BlockSparseMatrix,
    pub grid: Option<StructuredGrid>,
    pub rhs: BlockVector,
    pub label: String,
    pub provenance: String,
}

impl ProblemInstance {
    pub fn new(matrix: BlockSparseMatrix, grid: Option<StructuredGrid>, label: impl Into<String>, provenance: impl Into<String>) -> Result<Self> {
        if let Some(g) = &grid {
            if g.n_cells() != matrix.nrows_blocks() {
                return Err(Error::DimensionMismatch {
                    expected: g.n_cells(),
                    actual: matrix.nrows_blocks(),
                });
            }
        }
        let rhs = BlockVector::from_elem(matrix.nrows_blocks(), matrix.block_size(), 1.0);
        Ok(Self {
            matrix,
            grid,
            rhs,
            label: label.into(),
            provenance: provenance.into(),
        })
    }

    /// Attaches a grid after loading, e.g. for a Matrix Market file whose
    /// cell layout is known out of band.
    pub fn with_grid(mut self, grid: StructuredGrid) -> Result<Self> {
        if grid.n_cells() != self.matrix.nrows_blocks() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows_blocks(),
                actual: grid.n_cells(),
            });
        }
        self.grid = Some(grid);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RhsKind {
    /// All-ones vector.
    Ones,
    /// `k`-th standard basis vector (scalar index).
    Unit(usize),
    /// `b = A·1`, so the exact solution is all ones.
    FromSolutionOnes,
}

pub fn make_rhs(instance: &ProblemInstance, kind: RhsKind) -> Result<BlockVector> {
    let a = &instance.matrix;
    let (nb, b) = (a.nrows_blocks(), a.block_size());
    match kind {
        RhsKind::Ones => Ok(BlockVector::from_elem(nb, b, 1.0)),
        RhsKind::Unit(k) => {
            if k >= nb * b {
                return Err(Error::IndexOutOfRange { index: k, len: nb * b });
            }
            let mut v = BlockVector::zeros(nb, b);
            v.as_mut_slice()[k] = 1.0;
            Ok(v)
        }
        RhsKind::FromSolutionOnes => a.matvec(&BlockVector::from_elem(a.ncols_blocks(), b, 1.0)),
    }
}
