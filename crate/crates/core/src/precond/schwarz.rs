//! Subdomain-based preconditioners: additive Schwarz (classical and
//! restricted), the coarse lumping correction, two-level, two-stage, LSPS and
//! the boundary-conditioned method.

use std::collections::VecDeque;

use rayon::prelude::*;

use super::ilu::Ilu0;
use super::SubdomainSolver;
use crate::error::{Error, Result};
use crate::grid::{restriction_as_lumping, CompositeRestriction, Coarsening, Partition, ReducedSpace};
use crate::matrix::{lump_matrix, BlockSparseMatrix, LumpingMap, SparseLu};

#[derive(Debug, Clone)]
enum LocalSolver {
    Lu(SparseLu),
    Ilu(Ilu0),
}

impl LocalSolver {
    fn build(a: &BlockSparseMatrix, kind: SubdomainSolver) -> Result<Self> {
        Ok(match kind {
            SubdomainSolver::ExactLu => Self::Lu(SparseLu::factor(a)?),
            SubdomainSolver::Ilu0 => Self::Ilu(Ilu0::factor(a)?),
        })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        match self {
            Self::Lu(f) => f.solve_in_place(x),
            Self::Ilu(f) => f.solve_in_place(x),
        }
    }
}

/// One local problem `A_i = R_i A R_iᵀ`, with `R_i` = lump ∘ select.
#[derive(Debug, Clone)]
struct LocalProblem {
    /// Global cells read from the residual, in local order.
    support: Vec<usize>,
    /// Support position → reduced index; `None` means identity.
    map: Option<LumpingMap>,
    solver: LocalSolver,
    /// `(reduced index, global cell)` pairs written back.
    writes: Vec<(usize, usize)>,
    dim: usize,
}

impl LocalProblem {
    fn build(
        a: &BlockSparseMatrix,
        support: Vec<usize>,
        map: Option<LumpingMap>,
        writes: Vec<(usize, usize)>,
        kind: SubdomainSolver,
    ) -> Result<Self> {
        let sub = a.extract_principal_submatrix(&support)?;
        let local = match &map {
            Some(m) => lump_matrix(m, &sub)?,
            None => sub,
        };
        let dim = local.nrows_blocks();
        Ok(Self {
            support,
            map,
            solver: LocalSolver::build(&local, kind)?,
            writes,
            dim,
        })
    }

    /// Solves the local system for `r` and returns the reduced solution.
    fn solve(&self, b: usize, r: &[f64]) -> Vec<f64> {
        let mut gathered = vec![0.0; self.support.len() * b];
        for (l, &c) in self.support.iter().enumerate() {
            gathered[l * b..(l + 1) * b].copy_from_slice(&r[c * b..(c + 1) * b]);
        }
        let mut x = match &self.map {
            Some(m) => {
                let mut out = vec![0.0; m.n_coarse() * b];
                m.lump_into(b, &gathered, &mut out);
                out
            }
            None => gathered,
        };
        self.solver.solve_in_place(&mut x);
        x
    }
}

/// Runs every local solve (in parallel) and returns the solutions in
/// subdomain order, so assembly never depends on scheduling.
fn solve_all(locals: &[LocalProblem], b: usize, r: &[f64]) -> Vec<Vec<f64>> {
    locals.par_iter().map(|lp| lp.solve(b, r)).collect()
}

/// Cells within graph distance `overlap` of `seed`, sorted.
fn grow(adj: &[Vec<usize>], seed: &[usize], overlap: usize) -> Vec<usize> {
    if overlap == 0 {
        let mut s = seed.to_vec();
        s.sort_unstable();
        return s;
    }
    let mut dist = vec![usize::MAX; adj.len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &c in seed {
        dist[c] = 0;
        queue.push_back(c);
    }
    while let Some(c) = queue.pop_front() {
        if dist[c] == overlap {
            continue;
        }
        for &d in &adj[c] {
            if dist[d] == usize::MAX {
                dist[d] = dist[c] + 1;
                queue.push_back(d);
            }
        }
    }
    (0..adj.len()).filter(|&c| dist[c] != usize::MAX).collect()
}

fn check_grid(a: &BlockSparseMatrix, partition: &Partition) -> Result<()> {
    let n = partition.grid().n_cells();
    if !a.is_square() || a.nrows_blocks() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: a.nrows_blocks(),
        });
    }
    Ok(())
}

/// `Σ R_iᵀ A_i⁻¹ R_i` over (possibly overlapping) subdomains. The restricted
/// variant writes back owned cells only.
#[derive(Debug, Clone)]
pub struct AdditiveSchwarz {
    b: usize,
    n_cells: usize,
    restricted: bool,
    locals: Vec<LocalProblem>,
}

impl AdditiveSchwarz {
    pub fn build(a: &BlockSparseMatrix, partition: &Partition, overlap: usize, restricted: bool, kind: SubdomainSolver) -> Result<Self> {
        check_grid(a, partition)?;
        let adj = if overlap > 0 { a.adjacency() } else { Vec::new() };
        let locals = (0..partition.n_processors())
            .into_par_iter()
            .map(|p| {
                let own = partition.cells(p);
                let support = grow(&adj, &own, overlap);
                let writes = if restricted {
                    let mut own_sorted = own.clone();
                    own_sorted.sort_unstable();
                    support
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| own_sorted.binary_search(c).is_ok())
                        .map(|(l, &c)| (l, c))
                        .collect()
                } else {
                    support.iter().enumerate().map(|(l, &c)| (l, c)).collect()
                };
                LocalProblem::build(a, support, None, writes, kind)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            b: a.block_size(),
            n_cells: a.nrows_blocks(),
            restricted,
            locals,
        })
    }

    pub fn dim(&self) -> usize {
        self.n_cells * self.b
    }

    pub fn is_restricted(&self) -> bool {
        self.restricted
    }

    pub fn n_subdomains(&self) -> usize {
        self.locals.len()
    }

    pub fn mean_local_dim(&self) -> f64 {
        mean_dim(&self.locals)
    }

    pub fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        debug_assert_eq!(r.len(), self.n_cells * self.b);
        z.fill(0.0);
        let b = self.b;
        for (lp, x) in self.locals.iter().zip(solve_all(&self.locals, b, r)) {
            for &(l, c) in &lp.writes {
                for q in 0..b {
                    z[c * b + q] += x[l * b + q];
                }
            }
        }
    }
}

fn mean_dim(locals: &[LocalProblem]) -> f64 {
    if locals.is_empty() {
        return 0.0;
    }
    locals.iter().map(|l| l.dim as f64).sum::<f64>() / locals.len() as f64
}

/// Galerkin coarse correction `Eᵀ (E A Eᵀ)⁻¹ E`.
#[derive(Debug, Clone)]
pub struct CoarseCorrection {
    b: usize,
    map: LumpingMap,
    lu: SparseLu,
}

impl CoarseCorrection {
    pub fn build(a: &BlockSparseMatrix, map: LumpingMap) -> Result<Self> {
        if !a.is_square() || map.n_fine() != a.nrows_blocks() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows_blocks(),
                actual: map.n_fine(),
            });
        }
        let coarse = lump_matrix(&map, a)?;
        Ok(Self {
            b: a.block_size(),
            lu: SparseLu::factor(&coarse)?,
            map,
        })
    }

    pub fn map(&self) -> &LumpingMap {
        &self.map
    }

    pub fn dim(&self) -> usize {
        self.map.n_fine() * self.b
    }

    pub fn coarse_dim(&self) -> usize {
        self.map.n_coarse()
    }

    pub fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        let mut coarse = vec![0.0; self.map.n_coarse() * self.b];
        self.map.lump_into(self.b, r, &mut coarse);
        self.lu.solve_in_place(&mut coarse);
        self.map.prolong_into(self.b, &coarse, z);
    }
}

/// Truncated power series `(I + Σ_{i=1..k} (−T⁻¹E)ⁱ) T⁻¹` with `T` the
/// partition-aligned block diagonal of `A` and `E = A − T`.
#[derive(Debug, Clone)]
pub struct Lsps {
    block_jacobi: AdditiveSchwarz,
    coupling: BlockSparseMatrix,
    n_terms: usize,
}

impl Lsps {
    pub fn build(a: &BlockSparseMatrix, partition: &Partition, n_terms: usize, kind: SubdomainSolver) -> Result<Self> {
        check_grid(a, partition)?;
        let block_jacobi = AdditiveSchwarz::build(a, partition, 0, true, kind)?;
        let owner = partition.owners();
        let b = a.block_size();
        let mut trip: Vec<(usize, usize, &[f64])> = Vec::new();
        for r in 0..a.nrows_blocks() {
            let (cols, blocks) = a.row(r);
            for (k, &c) in cols.iter().enumerate() {
                if owner[r] != owner[c] {
                    trip.push((r, c, &blocks[k * b * b..(k + 1) * b * b]));
                }
            }
        }
        let coupling = BlockSparseMatrix::from_block_triplets(a.nrows_blocks(), a.ncols_blocks(), b, trip)?;
        Ok(Self {
            block_jacobi,
            coupling,
            n_terms,
        })
    }

    pub fn dim(&self) -> usize {
        self.block_jacobi.dim()
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn mean_local_dim(&self) -> f64 {
        self.block_jacobi.mean_local_dim()
    }

    pub fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        self.block_jacobi.apply_into(r, z);
        let mut y = z.to_vec();
        let mut ey = vec![0.0; y.len()];
        for _ in 0..self.n_terms {
            self.coupling.matvec_into(&y, &mut ey);
            self.block_jacobi.apply_into(&ey, &mut y);
            for (zi, yi) in z.iter_mut().zip(y.iter_mut()) {
                *yi = -*yi;
                *zi += *yi;
            }
        }
    }
}

/// Each processor solves its own cells at full resolution together with a
/// lumped image of (some of) the rest of the domain and keeps only the rows
/// it owns; the owned rows tile the grid, so assembly is a disjoint write.
#[derive(Debug, Clone)]
pub struct BoundaryConditioned {
    b: usize,
    n_cells: usize,
    locals: Vec<LocalProblem>,
}

impl BoundaryConditioned {
    pub fn build(
        a: &BlockSparseMatrix,
        partition: &Partition,
        near: Option<Coarsening>,
        far: Option<Coarsening>,
        kind: SubdomainSolver,
    ) -> Result<Self> {
        check_grid(a, partition)?;
        let spaces = (0..partition.n_processors())
            .into_par_iter()
            .map(|p| CompositeRestriction::build(partition, p, near, far).map(|r| restriction_as_lumping(&r)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_spaces(a, spaces, kind)
    }

    /// Builds from explicit reduced spaces; their owned cells must tile the
    /// grid exactly once.
    pub fn from_spaces(a: &BlockSparseMatrix, spaces: Vec<ReducedSpace>, kind: SubdomainSolver) -> Result<Self> {
        let n = a.nrows_blocks();
        let mut seen = vec![false; n];
        for s in &spaces {
            for &(_, c) in &s.owned {
                if c >= n {
                    return Err(Error::IndexOutOfRange { index: c, len: n });
                }
                if std::mem::replace(&mut seen[c], true) {
                    return Err(Error::InvalidPartition(format!("cell {c} owned twice")));
                }
            }
        }
        if let Some(c) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidPartition(format!("cell {c} owned by no processor")));
        }
        let locals = spaces
            .into_par_iter()
            .map(|s| {
                let map = if s.map.is_identity() { None } else { Some(s.map) };
                LocalProblem::build(a, s.support, map, s.owned, kind)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            b: a.block_size(),
            n_cells: n,
            locals,
        })
    }

    pub fn dim(&self) -> usize {
        self.n_cells * self.b
    }

    pub fn n_processors(&self) -> usize {
        self.locals.len()
    }

    /// Mean reduced dimension `m_i` over processors.
    pub fn mean_local_dim(&self) -> f64 {
        mean_dim(&self.locals)
    }

    pub fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        debug_assert_eq!(r.len(), self.n_cells * self.b);
        let b = self.b;
        for (lp, x) in self.locals.iter().zip(solve_all(&self.locals, b, r)) {
            for &(l, c) in &lp.writes {
                z[c * b..(c + 1) * b].copy_from_slice(&x[l * b..(l + 1) * b]);
            }
        }
    }
}
