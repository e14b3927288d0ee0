use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use bcschwarz::grid::{Coarsening, DecompositionMode, StructuredGrid};
use bcschwarz::harness::{emit_report, run_experiment, ExperimentSpec, Method, NearField, ProblemSource, ReportFormat, SweepResult};
use bcschwarz::krylov::{KrylovMethod, SolveConfig};
use bcschwarz::precond::NfMode;
use bcschwarz::problems::{GeneratorSpec, RhsKind};

/// Iteration-count sweeps over processor count K and coarsening C.
///
/// Exit status: 0 if every tuple converged, 2 if any did not, 1 on usage or
/// input errors.
#[derive(Debug, Parser)]
#[command(name = "bcs-sweep", version)]
struct Cli {
    /// Matrix Market file (coordinate real general).
    #[arg(long, conflicts_with_all = ["generate", "spec"])]
    matrix: Option<PathBuf>,
    /// Synthetic problem as KEY=VAL,... (nx, ny, nz, b, anisotropy, spread, delta, seed, wells=i:j;..., hwell=j:k).
    #[arg(long, conflicts_with = "spec")]
    generate: Option<String>,
    /// Re-run the experiment recorded in a JSON report.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Block size b for --matrix.
    #[arg(long, default_value_t = 1)]
    block_size: usize,
    /// Cell grid of --matrix, NXxNYxNZ.
    #[arg(long)]
    grid: Option<StructuredGrid>,
    #[arg(long, value_delimiter = ',', default_value = "bc-near,bc-far,bc-nearfar")]
    methods: Vec<Method>,
    #[arg(long = "K", value_delimiter = ',', default_value = "2,4,8")]
    k: Vec<usize>,
    #[arg(long = "C", value_delimiter = ',', default_value = "2,3")]
    c: Vec<usize>,
    /// Far-field coarsening for bc-nearfar: `domain` or a block size.
    /// Defaults to C with a full near field, `domain` with a coarsened one.
    #[arg(long)]
    cfar: Option<Coarsening>,
    /// Near field of the bc methods: `full` or `coarsened` (at C).
    #[arg(long, default_value = "full")]
    near: NearField,
    #[arg(long, default_value_t = 0)]
    overlap: usize,
    #[arg(long, default_value = "x")]
    decomp: DecompositionMode,
    /// gmres, gmres(M) or bicgstab.
    #[arg(long, default_value = "gmres")]
    krylov: KrylovMethod,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    maxit: usize,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    /// Overrides the generator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of LSPS series terms.
    #[arg(long, default_value_t = 2)]
    lsps_terms: usize,
    /// Use the column-sum variant of nested factorisation.
    #[arg(long)]
    nf_colsum: bool,
    /// Right-hand side: ones, unit:K or solution-ones.
    #[arg(long, default_value = "ones")]
    rhs: String,
    /// Run tuples one after another.
    #[arg(long)]
    serial: bool,
    /// Report zero wall times so output is byte-reproducible.
    #[arg(long)]
    no_wall_time: bool,
}

fn parse_rhs(s: &str) -> Result<RhsKind, String> {
    match s {
        "ones" => Ok(RhsKind::Ones),
        "solution-ones" => Ok(RhsKind::FromSolutionOnes),
        _ => s
            .strip_prefix("unit:")
            .and_then(|k| k.parse().ok())
            .map(RhsKind::Unit)
            .ok_or_else(|| format!("unknown right-hand side `{s}`")),
    }
}

fn build_spec(cli: &Cli) -> Result<ExperimentSpec, String> {
    if let Some(path) = &cli.spec {
        let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let recorded: SweepResult = serde_json::from_reader(io::BufReader::new(file)).map_err(|e| format!("{}: {e}", path.display()))?;
        return Ok(recorded.spec);
    }
    let problem = match (&cli.matrix, &cli.generate) {
        (Some(path), None) => ProblemSource::MatrixMarket {
            path: path.clone(),
            block_size: cli.block_size,
            grid: cli.grid,
        },
        (None, Some(text)) => ProblemSource::Generate(text.parse::<GeneratorSpec>().map_err(|e| e.to_string())?),
        _ => return Err("exactly one of --matrix, --generate or --spec is required".into()),
    };
    let mut spec = ExperimentSpec::new(problem);
    spec.decomposition = cli.decomp;
    spec.k_values = cli.k.clone();
    spec.methods = cli.methods.clone();
    spec.c_values = cli.c.clone();
    spec.near_field = cli.near;
    spec.c_far = cli.cfar;
    spec.overlap = cli.overlap;
    spec.solver = SolveConfig {
        method: cli.krylov,
        tol: cli.tol,
        max_iterations: cli.maxit,
    };
    spec.rhs = parse_rhs(&cli.rhs)?;
    spec.lsps_terms = cli.lsps_terms;
    spec.nf_mode = if cli.nf_colsum { NfMode::ColumnSum } else { NfMode::InnerBandExact };
    spec.seed = cli.seed;
    spec.parallel = !cli.serial;
    spec.record_wall_time = !cli.no_wall_time;
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn write_out(cli: &Cli, result: &SweepResult) -> bcschwarz::Result<()> {
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            emit_report(result, cli.format, &mut w)?;
            w.flush()?;
        }
        None => emit_report(result, cli.format, io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let spec = match build_spec(&cli) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let result = match run_experiment(&spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = write_out(&cli, &result) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    for r in result.records.iter().filter(|r| r.error.is_some()) {
        eprintln!("warning: {} K={} C={}: {}", r.method, r.k, r.c, r.error.as_deref().unwrap_or(""));
    }
    if result.all_converged() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
