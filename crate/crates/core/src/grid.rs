//! Structured grids, processor partitions and composite restrictions.
//!
//! Each simulated processor owns an axis-aligned box of cells. A
//! [`CompositeRestriction`] describes what one processor sees of the whole
//! problem: its own cells at full resolution, the boxes of face-neighbour
//! processors at a near-field coarsening, and everything else at a far-field
//! coarsening. Coarsenings are computed per processor box, so the far-field
//! grouping of a box is the same for every processor that uses it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::LumpingMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl StructuredGrid {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidSpec(format!("grid dimensions must be positive, got {nx}x{ny}x{nz}")));
        }
        Ok(Self { nx, ny, nz })
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    /// Natural ordering, x fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    #[inline]
    pub fn coords(&self, c: usize) -> [usize; 3] {
        [c % self.nx, (c / self.nx) % self.ny, c / (self.nx * self.ny)]
    }
}

impl std::fmt::Display for StructuredGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

impl std::str::FromStr for StructuredGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['x', ',']).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidSpec(format!("grid must look like NXxNYxNZ, got `{s}`")));
        }
        let mut d = [0usize; 3];
        for (slot, p) in d.iter_mut().zip(&parts) {
            *slot = p
                .trim()
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("bad grid dimension `{p}`")))?;
        }
        Self::new(d[0], d[1], d[2])
    }
}

/// Half-open box of cells `[lo, hi)` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl CellBox {
    pub fn extent(&self) -> [usize; 3] {
        [self.hi[0] - self.lo[0], self.hi[1] - self.lo[1], self.hi[2] - self.lo[2]]
    }

    pub fn n_cells(&self) -> usize {
        self.extent().iter().product()
    }

    /// Cells of the box in natural order.
    pub fn cells(&self, grid: &StructuredGrid) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_cells());
        for k in self.lo[2]..self.hi[2] {
            for j in self.lo[1]..self.hi[1] {
                for i in self.lo[0]..self.hi[0] {
                    out.push(grid.index(i, j, k));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecompositionMode {
    #[serde(rename = "x")]
    XOnly,
    #[serde(rename = "xy")]
    XAndY,
}

impl std::str::FromStr for DecompositionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Self::XOnly),
            "xy" => Ok(Self::XAndY),
            other => Err(Error::InvalidSpec(format!("unknown decomposition `{other}` (expected x or xy)"))),
        }
    }
}

impl std::fmt::Display for DecompositionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::XOnly => "x",
            Self::XAndY => "xy",
        })
    }
}

/// Assignment of grid cells to `K` simulated processors.
#[derive(Debug, Clone)]
pub struct Partition {
    grid: StructuredGrid,
    mode: DecompositionMode,
    splits: [usize; 2],
    boxes: Vec<CellBox>,
    owner: Vec<usize>,
    neighbours: Vec<Vec<usize>>,
}

/// Splits `n` planes into `p` contiguous runs whose sizes differ by at most one.
fn split_planes(n: usize, p: usize) -> Vec<(usize, usize)> {
    let (base, extra) = (n / p, n % p);
    let mut out = Vec::with_capacity(p);
    let mut lo = 0;
    for q in 0..p {
        let len = base + usize::from(q < extra);
        out.push((lo, lo + len));
        lo += len;
    }
    out
}

pub fn partition(grid: &StructuredGrid, k: usize, mode: DecompositionMode) -> Result<Partition> {
    Partition::new(grid, k, mode)
}

impl Partition {
    pub fn new(grid: &StructuredGrid, k: usize, mode: DecompositionMode) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPartition("processor count must be at least 1".into()));
        }
        let (px, py) = match mode {
            DecompositionMode::XOnly => (k, 1),
            DecompositionMode::XAndY => {
                // most nearly square factorisation that fits, px >= py
                let mut best = None;
                for py in (1..=k).rev() {
                    if !k.is_multiple_of(py) {
                        continue;
                    }
                    let px = k / py;
                    if px < py || px > grid.nx || py > grid.ny {
                        continue;
                    }
                    best = Some((px, py));
                    break;
                }
                best.ok_or_else(|| {
                    Error::InvalidPartition(format!("cannot split {grid} grid into {k} boxes in x and y"))
                })?
            }
        };
        if px > grid.nx || py > grid.ny {
            return Err(Error::InvalidPartition(format!(
                "{k} processors exceed the {} x-planes available",
                grid.nx
            )));
        }
        let xs = split_planes(grid.nx, px);
        let ys = split_planes(grid.ny, py);
        let mut boxes = Vec::with_capacity(k);
        for &(y0, y1) in &ys {
            for &(x0, x1) in &xs {
                boxes.push(CellBox {
                    lo: [x0, y0, 0],
                    hi: [x1, y1, grid.nz],
                });
            }
        }
        let mut owner = vec![0usize; grid.n_cells()];
        for (p, b) in boxes.iter().enumerate() {
            for c in b.cells(grid) {
                owner[c] = p;
            }
        }
        let neighbours = (0..k)
            .map(|p| {
                let (ix, iy) = (p % px, p / px);
                (0..k)
                    .filter(|&q| {
                        let (jx, jy) = (q % px, q / px);
                        ix.abs_diff(jx) + iy.abs_diff(jy) == 1
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            grid: *grid,
            mode,
            splits: [px, py],
            boxes,
            owner,
            neighbours,
        })
    }

    pub fn grid(&self) -> &StructuredGrid {
        &self.grid
    }

    pub fn mode(&self) -> DecompositionMode {
        self.mode
    }

    pub fn n_processors(&self) -> usize {
        self.boxes.len()
    }

    /// Processor counts along x and y.
    pub fn splits(&self) -> [usize; 2] {
        self.splits
    }

    pub fn owner(&self, cell: usize) -> usize {
        self.owner[cell]
    }

    pub fn owners(&self) -> &[usize] {
        &self.owner
    }

    pub fn domain(&self, p: usize) -> &CellBox {
        &self.boxes[p]
    }

    pub fn cells(&self, p: usize) -> Vec<usize> {
        self.boxes[p].cells(&self.grid)
    }

    /// Face-neighbour processors, ascending.
    pub fn neighbours(&self, p: usize) -> &[usize] {
        &self.neighbours[p]
    }

    /// Groups of processor `p`'s cells under `coarsening`, in the
    /// deterministic order of [`build_coarsening`].
    pub fn coarsen_domain(&self, p: usize, coarsening: Coarsening) -> Vec<Vec<usize>> {
        let cells = self.cells(p);
        match coarsening {
            Coarsening::Subdomain => vec![cells],
            Coarsening::Blocks(c) => {
                let map = build_coarsening(&self.grid, &cells, c).expect("processor domains are nonempty");
                map.groups()
                    .into_iter()
                    .map(|g| g.into_iter().map(|local| cells[local]).collect())
                    .collect()
            }
        }
    }

    /// Global coarse map formed by coarsening every processor domain
    /// separately and concatenating the groups in processor order.
    pub fn coarse_map(&self, coarsening: Coarsening) -> LumpingMap {
        let groups: Vec<Vec<usize>> = (0..self.n_processors())
            .flat_map(|p| self.coarsen_domain(p, coarsening))
            .collect();
        LumpingMap::from_groups(self.grid.n_cells(), &groups).expect("domains tile the grid")
    }
}

/// Coarsening level used for off-processor cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coarsening {
    /// `C×C×C` blocks anchored at the domain origin, clipped at its boundary.
    Blocks(usize),
    /// One group per processor domain.
    Subdomain,
}

impl std::fmt::Display for Coarsening {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Blocks(c) => write!(f, "{c}"),
            Self::Subdomain => f.write_str("domain"),
        }
    }
}

impl std::str::FromStr for Coarsening {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "domain" {
            return Ok(Self::Subdomain);
        }
        match s.parse::<usize>() {
            Ok(c) if c >= 1 => Ok(Self::Blocks(c)),
            _ => Err(Error::InvalidSpec(format!("coarsening must be `domain` or a positive integer, got `{s}`"))),
        }
    }
}

/// Tiles `region` (a set of cells, in the order given) with `C×C×C` blocks
/// anchored at the region's bounding-box origin. Each nonempty clipped block
/// is one group; groups are numbered in natural order of their block origin.
/// The returned map is indexed by position in `region`.
pub fn build_coarsening(grid: &StructuredGrid, region: &[usize], c: usize) -> Result<LumpingMap> {
    if region.is_empty() {
        return Err(Error::InvalidSpec("cannot coarsen an empty region".into()));
    }
    if c == 0 {
        return Err(Error::InvalidSpec("coarsening size must be at least 1".into()));
    }
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for &cell in region {
        let x = grid.coords(cell);
        for a in 0..3 {
            lo[a] = lo[a].min(x[a]);
            hi[a] = hi[a].max(x[a] + 1);
        }
    }
    let nblk: Vec<usize> = (0..3).map(|a| (hi[a] - lo[a]).div_ceil(c)).collect();
    let key = |cell: usize| {
        let x = grid.coords(cell);
        let b: Vec<usize> = (0..3).map(|a| (x[a] - lo[a]) / c).collect();
        b[0] + nblk[0] * (b[1] + nblk[1] * b[2])
    };
    let mut keys: Vec<usize> = region.iter().map(|&cell| key(cell)).collect();
    let mut distinct = keys.clone();
    distinct.sort_unstable();
    distinct.dedup();
    for k in keys.iter_mut() {
        *k = distinct.binary_search(k).expect("key present");
    }
    LumpingMap::from_assignment(keys, distinct.len())
}

/// One processor's view of the whole problem.
#[derive(Debug, Clone)]
pub struct CompositeRestriction {
    processor: usize,
    own: Vec<usize>,
    near: Vec<Vec<usize>>,
    far: Vec<Vec<usize>>,
}

impl CompositeRestriction {
    /// Own cells at identity resolution; face neighbours at `near` (if any);
    /// all remaining processors at `far` (if any). With `near = None`,
    /// neighbours fall into the far field. Cells with no level are dropped.
    pub fn build(partition: &Partition, p: usize, near: Option<Coarsening>, far: Option<Coarsening>) -> Result<Self> {
        let k = partition.n_processors();
        if p >= k {
            return Err(Error::InvalidPartition(format!("processor {p} out of range for K={k}")));
        }
        let own = partition.cells(p);
        let mut near_groups = Vec::new();
        let mut far_groups = Vec::new();
        for q in 0..k {
            if q == p {
                continue;
            }
            let is_neighbour = partition.neighbours(p).contains(&q);
            match (is_neighbour, near, far) {
                (true, Some(c), _) => near_groups.extend(partition.coarsen_domain(q, c)),
                (_, _, Some(c)) => far_groups.extend(partition.coarsen_domain(q, c)),
                _ => {}
            }
        }
        Ok(Self {
            processor: p,
            own,
            near: near_groups,
            far: far_groups,
        })
    }

    pub fn processor(&self) -> usize {
        self.processor
    }

    pub fn own_cells(&self) -> &[usize] {
        &self.own
    }

    pub fn near_groups(&self) -> &[Vec<usize>] {
        &self.near
    }

    pub fn far_groups(&self) -> &[Vec<usize>] {
        &self.far
    }

    /// Reduced dimension `m_i` in cells.
    pub fn reduced_dim(&self) -> usize {
        self.own.len() + self.near.len() + self.far.len()
    }

    pub fn covers_all(&self, n_cells: usize) -> bool {
        self.own.len() + self.near.iter().chain(&self.far).map(Vec::len).sum::<usize>() == n_cells
    }
}

/// `build_composite_restriction(partition, i, C, C_far)`: near field at `C`,
/// far field at `c_far`.
pub fn build_composite_restriction(
    partition: &Partition,
    p: usize,
    c: usize,
    c_far: Coarsening,
) -> Result<CompositeRestriction> {
    CompositeRestriction::build(partition, p, Some(Coarsening::Blocks(c)), Some(c_far))
}

/// A processor's reduced space as a lumping over a support set of cells.
///
/// Reduced index order: own cells (singletons) first, then near groups, then
/// far groups. When the restriction covers every cell, `support` is
/// `0..n` and `map` is a fine-to-reduced lumping of the whole grid.
#[derive(Debug, Clone)]
pub struct ReducedSpace {
    pub support: Vec<usize>,
    pub map: LumpingMap,
    /// `(reduced index, global cell)` for the rows this processor keeps.
    pub owned: Vec<(usize, usize)>,
}

impl ReducedSpace {
    pub fn covers_all(&self, n_cells: usize) -> bool {
        self.support.len() == n_cells
    }
}

pub fn restriction_as_lumping(r: &CompositeRestriction) -> ReducedSpace {
    let mut tagged: Vec<(usize, usize)> = Vec::with_capacity(r.own.len());
    let mut g = 0;
    for &cell in &r.own {
        tagged.push((cell, g));
        g += 1;
    }
    for group in r.near.iter().chain(&r.far) {
        for &cell in group {
            tagged.push((cell, g));
        }
        g += 1;
    }
    tagged.sort_unstable();
    let support: Vec<usize> = tagged.iter().map(|t| t.0).collect();
    let assignment: Vec<usize> = tagged.iter().map(|t| t.1).collect();
    let map = LumpingMap::from_assignment(assignment, g).expect("restriction groups are nonempty");
    let owned = r.own.iter().enumerate().map(|(k, &cell)| (k, cell)).collect();
    ReducedSpace { support, map, owned }
}
