//! Dense reference implementations used as oracles by the integration tests.
//!
//! Everything here works on plain `nalgebra` matrices built straight from the
//! block rows of the sparse input, and shares no numerical code with the
//! crate beyond reading its data structures.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use bcschwarz::grid::{CellBox, Partition, StructuredGrid};
use bcschwarz::problems::{generate_reservoir_matrix, ProblemInstance};
use bcschwarz::{BlockSparseMatrix, LumpingMap};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn dense(a: &BlockSparseMatrix) -> DMatrix<f64> {
    let b = a.block_size();
    let mut m = DMatrix::zeros(a.nrows(), a.ncols());
    for r in 0..a.nrows_blocks() {
        let (cols, blocks) = a.row(r);
        for (k, &c) in cols.iter().enumerate() {
            for i in 0..b {
                for j in 0..b {
                    m[(r * b + i, c * b + j)] = blocks[k * b * b + i * b + j];
                }
            }
        }
    }
    m
}

pub fn has_block(a: &BlockSparseMatrix, r: usize, c: usize) -> bool {
    a.block(r, c).is_some()
}

pub fn solve(m: &DMatrix<f64>, r: &DVector<f64>) -> DVector<f64> {
    m.clone().lu().solve(r).expect("oracle matrix is nonsingular")
}

pub fn inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().try_inverse().expect("oracle matrix is nonsingular")
}

pub fn rel_diff(got: &[f64], want: &DVector<f64>) -> f64 {
    let num: f64 = got.iter().zip(want.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    num / want.norm().max(f64::MIN_POSITIVE)
}

fn scalar_rows(cells: &[usize], b: usize) -> Vec<usize> {
    cells.iter().flat_map(|&c| c * b..(c + 1) * b).collect()
}

/// Random right-hand side of length `n`.
pub fn random_vector(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

/// Seeded small reservoir-style instance with at most 300 unknowns.
/// Odd seeds give 3×3 blocks; `wells` adds a producer/injector pair that
/// breaks the banded structure.
pub fn small_instance(seed: u64, wells: bool) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let b = if seed.is_multiple_of(2) { 1 } else { 3 };
    let (nx, ny, nz) = if b == 1 {
        (rng.gen_range(5..=8), rng.gen_range(3..=5), rng.gen_range(2..=4))
    } else {
        (rng.gen_range(4..=6), rng.gen_range(3..=4), rng.gen_range(2..=3))
    };
    let mut text = format!("nx={nx},ny={ny},nz={nz},b={b},seed={seed}");
    if wells {
        text += &format!(",wells=0:0;{}:{}", nx - 1, ny - 1);
    }
    let inst = generate_reservoir_matrix(&text.parse().unwrap()).unwrap();
    assert!(inst.n() <= 300);
    inst
}

/// Random block matrix with roughly `density` of its blocks stored, some of
/// them explicit zeros; `dominant` adds a heavy block diagonal.
pub fn random_bsr(seed: u64, nb: usize, b: usize, density: f64, dominant: bool) -> BlockSparseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trips = Vec::new();
    for r in 0..nb {
        for c in 0..nb {
            let diag = dominant && r == c;
            if !diag && !rng.gen_bool(density) {
                continue;
            }
            let mut blk: Vec<f64> = if rng.gen_bool(0.1) && !diag { vec![0.0; b * b] } else { (0..b * b).map(|_| rng.gen_range(-1.0..1.0)).collect() };
            if diag {
                for e in 0..b {
                    blk[e * b + e] += 2.0 * (nb * b) as f64 * density + 2.0;
                }
            }
            trips.push((r, c, blk));
        }
    }
    BlockSparseMatrix::from_block_triplets(nb, nb, b, trips.iter().map(|(r, c, v)| (*r, *c, v.as_slice()))).unwrap()
}

pub fn random_map(seed: u64, n: usize, groups: usize) -> LumpingMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // every group gets at least one member
    let mut assign: Vec<usize> = (0..n).map(|i| if i < groups { i } else { rng.gen_range(0..groups) }).collect();
    for i in (1..n).rev() {
        assign.swap(i, rng.gen_range(0..=i));
    }
    LumpingMap::from_assignment(assign, groups).unwrap()
}

pub fn lumping_dense(map: &LumpingMap, b: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(map.n_coarse() * b, map.n_fine() * b);
    for i in 0..map.n_fine() {
        for k in 0..b {
            e[(map.group_of(i) * b + k, i * b + k)] = 1.0;
        }
    }
    e
}

// ---------------------------------------------------------------------------
// grid-side oracles

pub fn box_cells(grid: &StructuredGrid, bx: &CellBox) -> Vec<usize> {
    let mut out = Vec::new();
    for k in bx.lo[2]..bx.hi[2] {
        for j in bx.lo[1]..bx.hi[1] {
            for i in bx.lo[0]..bx.hi[0] {
                out.push(i + grid.nx * (j + grid.ny * k));
            }
        }
    }
    out
}

/// Two boxes are face neighbours when they touch along exactly one axis and
/// coincide along the others.
pub fn face_neighbours(a: &CellBox, b: &CellBox) -> bool {
    let mut touch = 0;
    for ax in 0..3 {
        if a.lo[ax] == b.lo[ax] && a.hi[ax] == b.hi[ax] {
            continue;
        }
        if a.hi[ax] == b.lo[ax] || b.hi[ax] == a.lo[ax] {
            touch += 1;
        } else {
            return false;
        }
    }
    touch == 1
}

/// `C×C×C` blocks of a box anchored at its origin, as sets of cells.
pub fn box_blocks(grid: &StructuredGrid, bx: &CellBox, c: usize) -> Vec<BTreeSet<usize>> {
    let mut out = Vec::new();
    let e = bx.extent();
    for bk in (0..e[2]).step_by(c) {
        for bj in (0..e[1]).step_by(c) {
            for bi in (0..e[0]).step_by(c) {
                let sub = CellBox {
                    lo: [bx.lo[0] + bi, bx.lo[1] + bj, bx.lo[2] + bk],
                    hi: [
                        (bx.lo[0] + bi + c).min(bx.hi[0]),
                        (bx.lo[1] + bj + c).min(bx.hi[1]),
                        (bx.lo[2] + bk + c).min(bx.hi[2]),
                    ],
                };
                out.push(box_cells(grid, &sub).into_iter().collect());
            }
        }
    }
    out
}

/// Level of a processor's view of another subdomain: `None` drops it,
/// `Some(0)` is one group for the whole subdomain, `Some(c)` is `c`-blocks.
pub type Level = Option<usize>;

/// Reduced space of processor `p`: own cells as singletons followed by the
/// groups of every other subdomain.
pub fn composite_groups(part: &Partition, p: usize, near: Level, far: Level) -> (Vec<usize>, Vec<BTreeSet<usize>>) {
    let grid = part.grid();
    let me = part.domain(p);
    let own = box_cells(grid, me);
    let mut groups = Vec::new();
    for q in 0..part.n_processors() {
        if q == p {
            continue;
        }
        let other = part.domain(q);
        let level = if face_neighbours(me, other) && near.is_some() { near } else { far };
        match level {
            None => {}
            Some(0) => groups.push(box_cells(grid, other).into_iter().collect()),
            Some(c) => groups.extend(box_blocks(grid, other, c)),
        }
    }
    (own, groups)
}

// ---------------------------------------------------------------------------
// preconditioner oracles

/// Dense restriction operator whose rows sum the listed cell sets.
fn restriction(n_cells: usize, b: usize, sets: &[Vec<usize>]) -> DMatrix<f64> {
    let mut r = DMatrix::zeros(sets.len() * b, n_cells * b);
    for (g, set) in sets.iter().enumerate() {
        for &c in set {
            for e in 0..b {
                r[(g * b + e, c * b + e)] = 1.0;
            }
        }
    }
    r
}

/// `Rᵀ (R A Rᵀ)⁻¹ R r` for a subset of cells.
fn local_solve(ad: &DMatrix<f64>, b: usize, cells: &[usize], r: &DVector<f64>) -> DVector<f64> {
    let rows = scalar_rows(cells, b);
    let sub = ad.select_rows(&rows).select_columns(&rows);
    let rhs = DVector::from_iterator(rows.len(), rows.iter().map(|&i| r[i]));
    solve(&sub, &rhs)
}

/// Cells within graph distance `overlap` of `seed` on the block pattern.
pub fn grow_cells(a: &BlockSparseMatrix, seed: &[usize], overlap: usize) -> Vec<usize> {
    let n = a.nrows_blocks();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &c in seed {
        dist[c] = 0;
        queue.push_back(c);
    }
    while let Some(c) = queue.pop_front() {
        if dist[c] == overlap {
            continue;
        }
        for d in 0..n {
            if d != c && dist[d] == usize::MAX && (has_block(a, c, d) || has_block(a, d, c)) {
                dist[d] = dist[c] + 1;
                queue.push_back(d);
            }
        }
    }
    (0..n).filter(|&c| dist[c] != usize::MAX).collect()
}

/// Classical (`restricted = false`) or restricted additive Schwarz.
pub fn additive_schwarz(a: &BlockSparseMatrix, part: &Partition, overlap: usize, restricted: bool, r: &DVector<f64>) -> DVector<f64> {
    let (ad, b) = (dense(a), a.block_size());
    let mut z = DVector::zeros(r.len());
    for p in 0..part.n_processors() {
        let own: BTreeSet<usize> = box_cells(part.grid(), part.domain(p)).into_iter().collect();
        let support = grow_cells(a, &own.iter().copied().collect::<Vec<_>>(), overlap);
        let y = local_solve(&ad, b, &support, r);
        for (l, &c) in support.iter().enumerate() {
            if restricted && !own.contains(&c) {
                continue;
            }
            for e in 0..b {
                z[c * b + e] += y[l * b + e];
            }
        }
    }
    z
}

/// `Eᵀ (E A Eᵀ)⁻¹ E r`.
pub fn coarse_correction(a: &BlockSparseMatrix, groups: &[Vec<usize>], r: &DVector<f64>) -> DVector<f64> {
    let ad = dense(a);
    let e = restriction(a.nrows_blocks(), a.block_size(), groups);
    let ac = &e * &ad * e.transpose();
    e.transpose() * solve(&ac, &(&e * r))
}

/// Every subdomain of the partition split into `c`-blocks.
pub fn coarse_groups(part: &Partition, c: usize) -> Vec<Vec<usize>> {
    (0..part.n_processors())
        .flat_map(|p| box_blocks(part.grid(), part.domain(p), c))
        .map(|s| s.into_iter().collect())
        .collect()
}

pub fn two_level(a: &BlockSparseMatrix, part: &Partition, c: usize, r: &DVector<f64>) -> DVector<f64> {
    additive_schwarz(a, part, 0, false, r) + coarse_correction(a, &coarse_groups(part, c), r)
}

pub fn two_stage(a: &BlockSparseMatrix, part: &Partition, c: usize, r: &DVector<f64>) -> DVector<f64> {
    let z1 = additive_schwarz(a, part, 0, false, r);
    let r2 = r - dense(a) * &z1;
    z1 + coarse_correction(a, &coarse_groups(part, c), &r2)
}

/// `(I + Σ (−T⁻¹E)ⁱ) T⁻¹ r` with `T` the partition-aligned block diagonal.
pub fn lsps(a: &BlockSparseMatrix, part: &Partition, n_terms: usize, r: &DVector<f64>) -> DVector<f64> {
    let (ad, b) = (dense(a), a.block_size());
    let n = a.nrows_blocks();
    let owner: Vec<usize> = (0..n)
        .map(|c| (0..part.n_processors()).find(|&p| box_cells(part.grid(), part.domain(p)).contains(&c)).unwrap())
        .collect();
    let mut t = DMatrix::zeros(n * b, n * b);
    for i in 0..n * b {
        for j in 0..n * b {
            if owner[i / b] == owner[j / b] {
                t[(i, j)] = ad[(i, j)];
            }
        }
    }
    let e = &ad - &t;
    let tinv = inverse(&t);
    let step = -(&tinv * &e);
    let base = &tinv * r;
    let mut term = base.clone();
    let mut z = base;
    for _ in 0..n_terms {
        term = &step * term;
        z += &term;
    }
    z
}

/// Boundary-conditioned combination: each processor solves its lumped
/// system and keeps the rows of the cells it owns.
pub fn boundary_conditioned(a: &BlockSparseMatrix, part: &Partition, near: Level, far: Level, r: &DVector<f64>) -> DVector<f64> {
    let (ad, b) = (dense(a), a.block_size());
    let n = a.nrows_blocks();
    let mut z = DVector::zeros(r.len());
    for p in 0..part.n_processors() {
        let (own, groups) = composite_groups(part, p, near, far);
        let mut sets: Vec<Vec<usize>> = own.iter().map(|&c| vec![c]).collect();
        sets.extend(groups.iter().map(|g| g.iter().copied().collect::<Vec<_>>()));
        let rm = restriction(n, b, &sets);
        let ai = &rm * &ad * rm.transpose();
        let y = solve(&ai, &(&rm * r));
        for (l, &c) in own.iter().enumerate() {
            for e in 0..b {
                z[c * b + e] = y[l * b + e];
            }
        }
    }
    z
}

/// Block ILU(0): `L U` with both factors confined to the block pattern of
/// `A`, computed by dense IKJ elimination.
pub fn ilu0(a: &BlockSparseMatrix, r: &DVector<f64>) -> DVector<f64> {
    let (b, nb) = (a.block_size(), a.nrows_blocks());
    let mut w = dense(a);
    let blk = |m: &DMatrix<f64>, i: usize, j: usize| m.view((i * b, j * b), (b, b)).into_owned();
    for i in 1..nb {
        for k in 0..i {
            if !has_block(a, i, k) {
                continue;
            }
            let lik = blk(&w, i, k) * inverse(&blk(&w, k, k));
            w.view_mut((i * b, k * b), (b, b)).copy_from(&lik);
            for j in k + 1..nb {
                if has_block(a, i, j) {
                    let upd = blk(&w, i, j) - &lik * blk(&w, k, j);
                    w.view_mut((i * b, j * b), (b, b)).copy_from(&upd);
                }
            }
        }
    }
    let mut l = DMatrix::identity(nb * b, nb * b);
    let mut u = DMatrix::zeros(nb * b, nb * b);
    for i in 0..nb {
        for j in 0..nb {
            if !has_block(a, i, j) {
                continue;
            }
            let v = blk(&w, i, j);
            if j < i {
                l.view_mut((i * b, j * b), (b, b)).copy_from(&v);
            } else {
                u.view_mut((i * b, j * b), (b, b)).copy_from(&v);
            }
        }
    }
    solve(&(l * u), r)
}

/// Band pieces of a hepta-banded matrix in the permuted cell order used by
/// nested factorisation.
pub struct Bands {
    pub b: usize,
    pub dims: [usize; 3],
    /// Permuted position → natural cell.
    pub cell_of: Vec<usize>,
    pub d: DMatrix<f64>,
    pub l: [DMatrix<f64>; 3],
    pub u: [DMatrix<f64>; 3],
}

impl Bands {
    pub fn split(a: &BlockSparseMatrix, grid: &StructuredGrid, axes: [usize; 3]) -> Self {
        let b = a.block_size();
        let n = grid.n_cells();
        let gd = [grid.nx, grid.ny, grid.nz];
        let dims = [gd[axes[0]], gd[axes[1]], gd[axes[2]]];
        let strides = [1, dims[0], dims[0] * dims[1]];
        let mut cell_of = vec![0; n];
        for cell in 0..n {
            let x = [cell % grid.nx, (cell / grid.nx) % grid.ny, cell / (grid.nx * grid.ny)];
            let p = x[axes[0]] + dims[0] * (x[axes[1]] + dims[1] * x[axes[2]]);
            cell_of[p] = cell;
        }
        let ad = dense(a);
        let z = || DMatrix::zeros(n * b, n * b);
        let mut bands = Bands {
            b,
            dims,
            cell_of: cell_of.clone(),
            d: z(),
            l: [z(), z(), z()],
            u: [z(), z(), z()],
        };
        let coord = |p: usize| [p % dims[0], (p / dims[0]) % dims[1], p / (dims[0] * dims[1])];
        for p in 0..n {
            for q in 0..n {
                let v = ad.view((cell_of[p] * b, cell_of[q] * b), (b, b)).into_owned();
                if v.iter().all(|x| *x == 0.0) {
                    continue;
                }
                let (cp, cq) = (coord(p), coord(q));
                let diff: Vec<usize> = (0..3).filter(|&d| cp[d] != cq[d]).collect();
                let target = if diff.is_empty() {
                    &mut bands.d
                } else {
                    assert!(diff.len() == 1 && cp[diff[0]].abs_diff(cq[diff[0]]) == 1, "matrix is not hepta-banded");
                    let lvl = diff[0];
                    debug_assert_eq!(p.abs_diff(q), strides[lvl]);
                    if p > q {
                        &mut bands.l[lvl]
                    } else {
                        &mut bands.u[lvl]
                    }
                };
                target.view_mut((p * b, q * b), (b, b)).copy_from(&v);
            }
        }
        bands
    }

    fn blk(m: &DMatrix<f64>, b: usize, i: usize, j: usize) -> DMatrix<f64> {
        m.view((i * b, j * b), (b, b)).into_owned()
    }

    /// `(S + L)(I + S⁻¹U)` on the principal range `lo..hi` (in cells).
    fn factor(s: &DMatrix<f64>, l: &DMatrix<f64>, u: &DMatrix<f64>, b: usize, lo: usize, hi: usize) -> DMatrix<f64> {
        let m = (hi - lo) * b;
        let s = s.view((lo * b, lo * b), (m, m)).into_owned();
        let l = l.view((lo * b, lo * b), (m, m)).into_owned();
        let u = u.view((lo * b, lo * b), (m, m)).into_owned();
        let sinv_u = inverse(&s) * &u;
        (&s + &l) * (DMatrix::identity(m, m) + sinv_u)
    }

    /// Block column sums of `L S⁻¹ U`, where `S` lives on `prev` and `L`, `U`
    /// couple it to the segment `cur`.
    fn colsum(&self, s_prev: &DMatrix<f64>, lvl: usize, prev: (usize, usize), cur: (usize, usize)) -> Vec<DMatrix<f64>> {
        let b = self.b;
        let (mp, mc) = ((prev.1 - prev.0) * b, (cur.1 - cur.0) * b);
        let l = self.l[lvl].view((cur.0 * b, prev.0 * b), (mc, mp)).into_owned();
        let u = self.u[lvl].view((prev.0 * b, cur.0 * b), (mp, mc)).into_owned();
        let m = l * inverse(s_prev) * u;
        (0..cur.1 - cur.0)
            .map(|c| {
                let mut acc = DMatrix::zeros(b, b);
                for r in 0..cur.1 - cur.0 {
                    acc += m.view((r * b, c * b), (b, b));
                }
                acc
            })
            .collect()
    }

    /// The nested-factorisation matrix `B`, in permuted order.
    pub fn nested(&self, column_sum: bool) -> DMatrix<f64> {
        let b = self.b;
        let [n1, n2, n3] = self.dims;
        let n = n1 * n2 * n3;
        let mut g = DMatrix::zeros(n * b, n * b);
        for k in 0..n3 {
            let plane = (k * n1 * n2, (k + 1) * n1 * n2);
            let s3 = if column_sum && k > 0 {
                let prev = (plane.0 - n1 * n2, plane.0);
                let mut t = DMatrix::zeros(n * b, n * b);
                for j in 0..n2 {
                    let (lo, hi) = (prev.0 + j * n1, prev.0 + (j + 1) * n1);
                    let f = Self::factor(&g, &self.l[0], &self.u[0], b, lo, hi);
                    t.view_mut((lo * b, lo * b), (n1 * b, n1 * b)).copy_from(&f);
                }
                let p = Self::factor(&t, &self.l[1], &self.u[1], b, prev.0, prev.1);
                self.colsum(&p, 2, prev, plane)
            } else {
                vec![DMatrix::zeros(b, b); n1 * n2]
            };
            for j in 0..n2 {
                let line = (plane.0 + j * n1, plane.0 + (j + 1) * n1);
                let s2 = if column_sum && j > 0 {
                    let prev = (line.0 - n1, line.0);
                    let t = Self::factor(&g, &self.l[0], &self.u[0], b, prev.0, prev.1);
                    self.colsum(&t, 1, prev, line)
                } else {
                    vec![DMatrix::zeros(b, b); n1]
                };
                for i in 0..n1 {
                    let p = line.0 + i;
                    let mut gp = Self::blk(&self.d, b, p, p) - &s2[i] - &s3[j * n1 + i];
                    if i > 0 {
                        let corr = Self::blk(&self.l[0], b, p, p - 1) * inverse(&Self::blk(&g, b, p - 1, p - 1)) * Self::blk(&self.u[0], b, p - 1, p);
                        gp -= corr;
                    }
                    g.view_mut((p * b, p * b), (b, b)).copy_from(&gp);
                }
            }
        }
        let t = Self::factor(&g, &self.l[0], &self.u[0], b, 0, n);
        let p = Self::factor(&t, &self.l[1], &self.u[1], b, 0, n);
        Self::factor(&p, &self.l[2], &self.u[2], b, 0, n)
    }

    /// Maps a permuted-order vector back to natural cell order.
    pub fn unpermute(&self, x: &DVector<f64>) -> DVector<f64> {
        let b = self.b;
        let mut out = DVector::zeros(x.len());
        for (p, &c) in self.cell_of.iter().enumerate() {
            for e in 0..b {
                out[c * b + e] = x[p * b + e];
            }
        }
        out
    }

    pub fn permute(&self, x: &DVector<f64>) -> DVector<f64> {
        let b = self.b;
        let mut out = DVector::zeros(x.len());
        for (p, &c) in self.cell_of.iter().enumerate() {
            for e in 0..b {
                out[p * b + e] = x[c * b + e];
            }
        }
        out
    }
}

/// `B⁻¹ r` for nested factorisation along `axes`.
pub fn nested(a: &BlockSparseMatrix, grid: &StructuredGrid, axes: [usize; 3], column_sum: bool, r: &DVector<f64>) -> DVector<f64> {
    let bands = Bands::split(a, grid, axes);
    let bm = bands.nested(column_sum);
    bands.unpermute(&solve(&bm, &bands.permute(r)))
}

/// Dense matrix of a linear operator given by its action on unit vectors.
pub fn operator_matrix(n: usize, mut apply: impl FnMut(&[f64], &mut [f64])) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        apply(&e, &mut col);
        m.set_column(j, &DVector::from_column_slice(&col));
        e[j] = 0.0;
    }
    m
}

// ---------------------------------------------------------------------------
// benchmark problems

/// Generator settings of the stand-in used when the ORSREG1 file is absent:
/// the same 21×21×5 seven-point structure (n = 2205, nnz = 14133) with the
/// diagonal shift tuned to a condition number near 6.7e3.
pub const ORSREG1_STANDIN: &str = "nx=21,ny=21,nz=5,delta=0.038";

/// ORSREG1 from `$ORSREG1_PATH` or `data/orsreg_1.mtx` in the workspace
/// root; otherwise the stand-in. The flag tells which one was loaded.
pub fn orsreg1() -> (ProblemInstance, bool) {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let path = std::env::var_os("ORSREG1_PATH")
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| root.join("data/orsreg_1.mtx"));
    if path.exists() {
        let grid = StructuredGrid::new(21, 21, 5).unwrap();
        let inst = bcschwarz::problems::read_matrix_market(&path, 1).unwrap().with_grid(grid).unwrap();
        return (inst, true);
    }
    (generate_reservoir_matrix(&ORSREG1_STANDIN.parse().unwrap()).unwrap(), false)
}
