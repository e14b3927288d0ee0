//! K × C sweeps: build a preconditioner per (method, K, C) tuple, solve,
//! and report iteration counts.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Coarsening, DecompositionMode, Partition, StructuredGrid};
use crate::krylov::{self, SolveConfig, SolveReport};
use crate::precond::{
    AdditiveSchwarz, AxisOrder, BoundaryConditioned, CoarseCorrection, Ilu0, Lsps, NestedFactorisation, NfMode, Preconditioner,
    SubdomainSolver,
};
use crate::problems::{generate_reservoir_matrix, make_rhs, read_matrix_market, GeneratorSpec, ProblemInstance, RhsKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ilu0,
    Nf,
    As,
    #[serde(rename = "as-2level")]
    As2Level,
    #[serde(rename = "as-2stage")]
    As2Stage,
    Lsps,
    BcNear,
    BcFar,
    BcNearfar,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Ilu0,
        Method::Nf,
        Method::As,
        Method::As2Level,
        Method::As2Stage,
        Method::Lsps,
        Method::BcNear,
        Method::BcFar,
        Method::BcNearfar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ilu0 => "ilu0",
            Method::Nf => "nf",
            Method::As => "as",
            Method::As2Level => "as-2level",
            Method::As2Stage => "as-2stage",
            Method::Lsps => "lsps",
            Method::BcNear => "bc-near",
            Method::BcFar => "bc-far",
            Method::BcNearfar => "bc-nearfar",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidSpec(format!("unknown method `{s}`")))
    }
}

/// Resolution of the neighbouring subdomains in the boundary-conditioned
/// methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NearField {
    /// Neighbour cells kept uncoarsened; C then sets the far-field blocks.
    #[default]
    Full,
    /// Neighbour cells coarsened in C×C×C blocks; the far field uses `c_far`
    /// (whole subdomains when unset).
    Coarsened,
}

impl fmt::Display for NearField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NearField::Full => "full",
            NearField::Coarsened => "coarsened",
        })
    }
}

impl FromStr for NearField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(NearField::Full),
            "coarsened" | "coarse" => Ok(NearField::Coarsened),
            _ => Err(Error::InvalidSpec(format!("unknown near-field mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemSource {
    MatrixMarket {
        path: PathBuf,
        block_size: usize,
        /// Cell layout of the file, needed by every grid-based method.
        grid: Option<StructuredGrid>,
    },
    Generate(GeneratorSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub problem: ProblemSource,
    pub decomposition: DecompositionMode,
    pub k_values: Vec<usize>,
    pub methods: Vec<Method>,
    pub c_values: Vec<usize>,
    pub near_field: NearField,
    /// Far-field grouping; when unset it follows C (full near field) or is one
    /// group per subdomain (coarsened near field).
    pub c_far: Option<Coarsening>,
    pub overlap: usize,
    pub solver: SolveConfig,
    pub rhs: RhsKind,
    pub lsps_terms: usize,
    pub nf_mode: NfMode,
    pub subdomain_solver: SubdomainSolver,
    /// Overrides the generator seed when set.
    pub seed: Option<u64>,
    /// Run tuples concurrently.
    pub parallel: bool,
    /// Record wall times; when false they are reported as zero so output is
    /// byte-reproducible.
    pub record_wall_time: bool,
}

impl ExperimentSpec {
    pub fn new(problem: ProblemSource) -> Self {
        Self {
            problem,
            decomposition: DecompositionMode::XOnly,
            k_values: vec![2, 4, 8],
            methods: vec![Method::BcNear, Method::BcFar, Method::BcNearfar],
            c_values: vec![2, 3],
            near_field: NearField::Full,
            c_far: None,
            overlap: 0,
            solver: SolveConfig::default(),
            rhs: RhsKind::Ones,
            lsps_terms: 2,
            nf_mode: NfMode::InnerBandExact,
            subdomain_solver: SubdomainSolver::ExactLu,
            seed: None,
            parallel: true,
            record_wall_time: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() || self.methods.is_empty() || self.c_values.is_empty() {
            return Err(Error::InvalidSpec("K, C and method lists must be nonempty".into()));
        }
        if self.k_values.contains(&0) {
            return Err(Error::InvalidSpec("K must be at least 1".into()));
        }
        if self.c_values.contains(&0) {
            return Err(Error::InvalidSpec("C must be at least 1".into()));
        }
        self.solver.validate()
    }

    pub fn load_problem(&self) -> Result<ProblemInstance> {
        match &self.problem {
            ProblemSource::MatrixMarket { path, block_size, grid } => {
                let inst = read_matrix_market(path, *block_size)?;
                match grid {
                    Some(g) => inst.with_grid(*g),
                    None => Ok(inst),
                }
            }
            ProblemSource::Generate(g) => {
                let mut g = g.clone();
                if let Some(seed) = self.seed {
                    g.seed = seed;
                }
                generate_reservoir_matrix(&g)
            }
        }
    }
}

/// One (method, K, C) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub method: Method,
    pub k: usize,
    pub c: usize,
    pub iterations: usize,
    pub converged: bool,
    /// `NaN` (JSON `null`) when the tuple failed.
    #[serde(with = "nan_as_null")]
    pub final_residual: f64,
    /// Mean size (in cells) of the per-processor systems.
    pub total_blocks: f64,
    pub wall_ms: f64,
    /// Full solve report; absent when building or solving failed.
    pub report: Option<SolveReport>,
    pub error: Option<String>,
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: ExperimentSpec,
    pub problem: String,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }

    pub fn find(&self, method: Method, k: usize, c: usize) -> Option<&SweepRecord> {
        self.records.iter().find(|r| r.method == method && r.k == k && r.c == c)
    }
}

/// Builds the preconditioner used for one tuple.
pub fn build_preconditioner(
    spec: &ExperimentSpec,
    problem: &ProblemInstance,
    method: Method,
    k: usize,
    c: usize,
) -> Result<Preconditioner> {
    let a = &problem.matrix;
    if method == Method::Ilu0 {
        return Ok(Preconditioner::Ilu0(Ilu0::factor(a)?));
    }
    let grid = problem
        .grid
        .ok_or_else(|| Error::InvalidSpec(format!("method {method} needs a grid for the matrix")))?;
    if method == Method::Nf {
        return Ok(Preconditioner::Nested(NestedFactorisation::factor(a, &grid, spec.nf_mode, AxisOrder::Auto)?));
    }
    let part = Partition::new(&grid, k, spec.decomposition)?;
    let kind = spec.subdomain_solver;
    let blocks = Coarsening::Blocks(c);
    let (near, far) = match spec.near_field {
        NearField::Full => (Coarsening::Blocks(1), spec.c_far.unwrap_or(blocks)),
        NearField::Coarsened => (blocks, spec.c_far.unwrap_or(Coarsening::Subdomain)),
    };
    Ok(match method {
        Method::As => Preconditioner::Schwarz(AdditiveSchwarz::build(a, &part, spec.overlap, false, kind)?),
        Method::As2Level | Method::As2Stage => {
            let schwarz = AdditiveSchwarz::build(a, &part, spec.overlap, false, kind)?;
            let coarse = CoarseCorrection::build(a, part.coarse_map(blocks))?;
            if method == Method::As2Level {
                Preconditioner::TwoLevel { schwarz, coarse }
            } else {
                Preconditioner::two_stage(a, schwarz, coarse)
            }
        }
        Method::Lsps => Preconditioner::Lsps(Lsps::build(a, &part, spec.lsps_terms, kind)?),
        Method::BcNear => Preconditioner::BoundaryConditioned(BoundaryConditioned::build(a, &part, Some(near), None, kind)?),
        // Alone, the far field is the only coarsened level, so it takes C.
        Method::BcFar => Preconditioner::BoundaryConditioned(BoundaryConditioned::build(a, &part, None, Some(blocks), kind)?),
        Method::BcNearfar => Preconditioner::BoundaryConditioned(BoundaryConditioned::build(a, &part, Some(near), Some(far), kind)?),
        Method::Ilu0 | Method::Nf => unreachable!(),
    })
}

fn run_tuple(spec: &ExperimentSpec, problem: &ProblemInstance, rhs: &crate::BlockVector, method: Method, k: usize, c: usize) -> SweepRecord {
    let outcome = build_preconditioner(spec, problem, method, k, c).and_then(|m| {
        let total = m.mean_local_dim().unwrap_or(problem.matrix.nrows_blocks() as f64);
        krylov::solve(&problem.matrix, rhs, &m, &spec.solver).map(|(_, rep)| (rep, total))
    });
    match outcome {
        Ok((mut rep, total_blocks)) => {
            if !spec.record_wall_time {
                rep.wall_time = std::time::Duration::ZERO;
            }
            SweepRecord {
                method,
                k,
                c,
                iterations: rep.iterations,
                converged: rep.converged,
                final_residual: rep.final_residual,
                total_blocks,
                wall_ms: rep.wall_time.as_secs_f64() * 1e3,
                report: Some(rep),
                error: None,
            }
        }
        Err(e) => SweepRecord {
            method,
            k,
            c,
            iterations: 0,
            converged: false,
            final_residual: f64::NAN,
            total_blocks: 0.0,
            wall_ms: 0.0,
            report: None,
            error: Some(e.to_string()),
        },
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let problem = spec.load_problem()?;
    run_on_problem(spec, &problem)
}

/// Runs the sweep on an already-loaded problem. Build or solve failures are
/// recorded per tuple; records come back sorted by (method, K, C).
pub fn run_on_problem(spec: &ExperimentSpec, problem: &ProblemInstance) -> Result<SweepResult> {
    spec.validate()?;
    let rhs = make_rhs(problem, spec.rhs)?;
    let mut methods = spec.methods.clone();
    methods.sort_unstable();
    methods.dedup();
    let mut ks = spec.k_values.clone();
    ks.sort_unstable();
    ks.dedup();
    let mut cs = spec.c_values.clone();
    cs.sort_unstable();
    cs.dedup();
    let mut tuples: Vec<(Method, usize, usize)> = Vec::with_capacity(methods.len() * ks.len() * cs.len());
    for &m in &methods {
        for &k in &ks {
            for &c in &cs {
                tuples.push((m, k, c));
            }
        }
    }
    let records: Vec<SweepRecord> = if spec.parallel {
        tuples.par_iter().map(|&(m, k, c)| run_tuple(spec, problem, &rhs, m, k, c)).collect()
    } else {
        tuples.iter().map(|&(m, k, c)| run_tuple(spec, problem, &rhs, m, k, c)).collect()
    };
    Ok(SweepResult {
        spec: spec.clone(),
        problem: format!("{} ({})", problem.label, problem.provenance),
        records,
    })
}

/// Runs the sweep inside a dedicated pool of `threads` workers (1 = fully
/// serial, including subdomain solves).
pub fn run_with_threads(spec: &ExperimentSpec, problem: &ProblemInstance, threads: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?;
    pool.install(|| run_on_problem(spec, problem))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
    Table,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "table" => Ok(Self::Table),
            other => Err(Error::InvalidSpec(format!("unknown report format `{other}`"))),
        }
    }
}

pub const CSV_HEADER: [&str; 8] = ["method", "K", "C", "iterations", "converged", "final_residual", "total_blocks", "wall_ms"];

fn row(r: &SweepRecord) -> [String; 8] {
    [
        r.method.to_string(),
        r.k.to_string(),
        r.c.to_string(),
        r.iterations.to_string(),
        r.converged.to_string(),
        format!("{:e}", r.final_residual),
        r.total_blocks.to_string(),
        format!("{:.3}", r.wall_ms),
    ]
}

pub fn emit_report<W: Write>(result: &SweepResult, format: ReportFormat, mut out: W) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            for r in &result.records {
                w.write_record(row(r))?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, result)?;
            writeln!(out)?;
        }
        ReportFormat::Table => {
            let rows: Vec<[String; 8]> = result.records.iter().map(row).collect();
            let mut width: Vec<usize> = CSV_HEADER.iter().map(|h| h.len()).collect();
            for r in &rows {
                for (w, cell) in width.iter_mut().zip(r) {
                    *w = (*w).max(cell.len());
                }
            }
            let line = |cells: Vec<&str>| {
                cells
                    .iter()
                    .zip(&width)
                    .enumerate()
                    .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            writeln!(out, "{}", line(CSV_HEADER.to_vec()))?;
            for r in &rows {
                writeln!(out, "{}", line(r.iter().map(String::as_str).collect()))?;
            }
        }
    }
    Ok(())
}

pub fn report_to_string(result: &SweepResult, format: ReportFormat) -> Result<String> {
    let mut buf = Vec::new();
    emit_report(result, format, &mut buf)?;
    Ok(String::from_utf8(buf).expect("reports are UTF-8"))
}
