//! Seeded reservoir-style matrices on a structured grid.
//!
//! Face couplings are `-T·M`, where `T` is the harmonic mean of two
//! log-uniform cell multipliers (scaled by the anisotropy on z faces) and `M`
//! is a per-component mobility block taken from the column cell. Each diagonal
//! block is chosen so that its block column sums to `δ·I`, which keeps the
//! matrix nonsingular while leaving it as ill-conditioned as `δ` demands.
//! Wells add couplings between every pair of completed cells, which is what
//! breaks the hepta-banded pattern.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ProblemInstance;
use crate::error::{Error, Result};
use crate::grid::StructuredGrid;
use crate::matrix::BlockSparseMatrix;

/// Base mobility block for three components; diagonally dominant so face
/// couplings stay well posed.
const M0: [f64; 9] = [1.0, 0.1, 0.05, 0.2, 0.5, 0.05, 0.1, 0.05, 0.4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// 1 (pressure only) or 3 (three-phase).
    pub block_size: usize,
    /// Multiplier on z-face transmissibilities.
    pub anisotropy: f64,
    /// Cell multipliers are log-uniform in `[1/spread, spread]`.
    pub spread: f64,
    /// Block column sum added to every diagonal block.
    pub delta: f64,
    /// Vertical wells at `(i, j)`, completed through all layers.
    pub wells: Vec<(usize, usize)>,
    /// Horizontal well along x at `(j, k)`.
    pub horizontal_well: Option<(usize, usize)>,
    /// Coupling strength between completed cells.
    pub well_index: f64,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            nx: 10,
            ny: 10,
            nz: 3,
            block_size: 1,
            anisotropy: 10.0,
            spread: 10.0,
            delta: 0.05,
            wells: Vec::new(),
            horizontal_well: None,
            well_index: 1.0,
            seed: 1,
        }
    }
}

impl GeneratorSpec {
    pub fn grid(&self) -> Result<StructuredGrid> {
        StructuredGrid::new(self.nx, self.ny, self.nz)
    }

    fn validate(&self) -> Result<StructuredGrid> {
        let grid = self.grid()?;
        if self.block_size != 1 && self.block_size != 3 {
            return Err(Error::InvalidSpec(format!("block size must be 1 or 3, got {}", self.block_size)));
        }
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("anisotropy", self.anisotropy)?;
        positive("delta", self.delta)?;
        positive("well_index", self.well_index)?;
        if !(self.spread.is_finite() && self.spread >= 1.0) {
            return Err(Error::InvalidSpec(format!("spread must be >= 1, got {}", self.spread)));
        }
        for &(i, j) in &self.wells {
            if i >= self.nx || j >= self.ny {
                return Err(Error::InvalidSpec(format!("well ({i}, {j}) outside {grid}")));
            }
        }
        if let Some((j, k)) = self.horizontal_well {
            if j >= self.ny || k >= self.nz {
                return Err(Error::InvalidSpec(format!("horizontal well ({j}, {k}) outside {grid}")));
            }
        }
        Ok(grid)
    }

    /// Cells completed by each well, in declaration order.
    fn completions(&self, grid: &StructuredGrid) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self
            .wells
            .iter()
            .map(|&(i, j)| (0..self.nz).map(|k| grid.index(i, j, k)).collect())
            .collect();
        if let Some((j, k)) = self.horizontal_well {
            out.push((0..self.nx).map(|i| grid.index(i, j, k)).collect());
        }
        out
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "nx={},ny={},nz={},b={},anisotropy={},spread={},delta={},well_index={},seed={}",
            self.nx, self.ny, self.nz, self.block_size, self.anisotropy, self.spread, self.delta, self.well_index, self.seed
        )?;
        if !self.wells.is_empty() {
            let w: Vec<String> = self.wells.iter().map(|(i, j)| format!("{i}:{j}")).collect();
            write!(f, ",wells={}", w.join(";"))?;
        }
        if let Some((j, k)) = self.horizontal_well {
            write!(f, ",hwell={j}:{k}")?;
        }
        Ok(())
    }
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidSpec(format!("expected `a:b`, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    /// Comma-separated `key=value` pairs over the defaults.
    fn from_str(s: &str) -> Result<Self> {
        let mut spec = Self::default();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidSpec(format!("expected key=value, got `{item}`")))?;
            let value = value.trim();
            let int = |v: &str| v.parse::<usize>().map_err(|_| Error::InvalidSpec(format!("{key}: bad integer `{v}`")));
            let real = |v: &str| v.parse::<f64>().map_err(|_| Error::InvalidSpec(format!("{key}: bad number `{v}`")));
            match key.trim() {
                "nx" => spec.nx = int(value)?,
                "ny" => spec.ny = int(value)?,
                "nz" => spec.nz = int(value)?,
                "b" | "block_size" => spec.block_size = int(value)?,
                "anisotropy" => spec.anisotropy = real(value)?,
                "spread" => spec.spread = real(value)?,
                "delta" => spec.delta = real(value)?,
                "well_index" => spec.well_index = real(value)?,
                "seed" => spec.seed = value.parse().map_err(|_| Error::InvalidSpec(format!("seed: bad integer `{value}`")))?,
                "wells" => {
                    spec.wells = value
                        .split(';')
                        .filter(|t| !t.trim().is_empty())
                        .map(parse_pair)
                        .collect::<Result<_>>()?
                }
                "hwell" => spec.horizontal_well = Some(parse_pair(value)?),
                other => return Err(Error::InvalidSpec(format!("unknown generator key `{other}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Mobility block seen from a column cell with saturation `s`. Taking it
/// from the column cell makes the values nonsymmetric (upwind-like) while
/// block column sums stay exact.
fn mobility(b: usize, s: f64) -> Vec<f64> {
    if b == 1 {
        return vec![0.5 + s];
    }
    let mut m = M0.to_vec();
    let scale = [1.0, 0.5 + s, 1.5 - s];
    for p in 0..3 {
        for q in 0..3 {
            m[p * 3 + q] *= scale[p];
        }
    }
    m
}

pub fn generate_reservoir_matrix(spec: &GeneratorSpec) -> Result<ProblemInstance> {
    let grid = spec.validate()?;
    let (n, b) = (grid.n_cells(), spec.block_size);
    let bb = b * b;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ln_spread = spec.spread.ln();
    let perm: Vec<f64> = (0..n)
        .map(|_| if ln_spread > 0.0 { rng.gen_range(-ln_spread..=ln_spread).exp() } else { 1.0 })
        .collect();
    let mut sat: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let completions = spec.completions(&grid);
    // The first vertical well injects (swept), any others produce (unswept).
    for (w, cells) in completions.iter().enumerate().take(spec.wells.len()) {
        let s = if w == 0 { 1.0 } else { 0.0 };
        cells.iter().for_each(|&c| sat[c] = s);
    }
    let well_strength: Vec<f64> = completions.iter().map(|_| spec.well_index * rng.gen_range(0.5..1.5)).collect();

    // (row, col, T): coupling block at (row, col) is -T·M(col).
    let mut couplings: Vec<(usize, usize, f64)> = Vec::with_capacity(6 * n);
    let [nx, ny, nz] = grid.dims();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let c = grid.index(i, j, k);
                let mut face = |d: usize, scale: f64| {
                    let t = scale * 2.0 * perm[c] * perm[d] / (perm[c] + perm[d]);
                    couplings.push((c, d, t));
                    couplings.push((d, c, t));
                };
                if i + 1 < nx {
                    face(grid.index(i + 1, j, k), 1.0);
                }
                if j + 1 < ny {
                    face(grid.index(i, j + 1, k), 1.0);
                }
                if k + 1 < nz {
                    face(grid.index(i, j, k + 1), spec.anisotropy);
                }
            }
        }
    }
    for (cells, &w) in completions.iter().zip(&well_strength) {
        for (a, &p) in cells.iter().enumerate() {
            for &q in &cells[a + 1..] {
                couplings.push((p, q, w));
                couplings.push((q, p, w));
            }
        }
    }

    let mut diag = vec![0.0; n * bb];
    let mut trip: Vec<(usize, usize, Vec<f64>)> = Vec::with_capacity(couplings.len() + n);
    for &(r, c, t) in &couplings {
        let m = mobility(b, sat[c]);
        let blk: Vec<f64> = m.iter().map(|v| -t * v).collect();
        for (d, v) in diag[c * bb..(c + 1) * bb].iter_mut().zip(&blk) {
            *d -= v;
        }
        trip.push((r, c, blk));
    }
    for c in 0..n {
        for p in 0..b {
            diag[c * bb + p * b + p] += spec.delta;
        }
        trip.push((c, c, diag[c * bb..(c + 1) * bb].to_vec()));
    }
    let matrix = BlockSparseMatrix::from_block_triplets(n, n, b, trip.iter().map(|(r, c, v)| (*r, *c, v.as_slice())))?;
    ProblemInstance::new(matrix, Some(grid), format!("synthetic-{grid}-b{b}"), format!("generated: {spec}"))
}
