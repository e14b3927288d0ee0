//! Boundary-conditioned additive Schwarz preconditioning for block sparse
//! systems from reservoir simulation, together with the classical baselines
//! it is measured against and an iteration-count experiment harness.

pub mod error;
pub mod grid;
pub mod harness;
pub mod krylov;
pub mod matrix;
pub mod precond;
pub mod problems;

pub use error::{Error, Result};
pub use matrix::{BlockSparseMatrix, BlockVector, LumpingMap, SparseLu};
