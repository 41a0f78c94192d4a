//! The `harmcanon` command-line front end.
//!
//! Exit codes: 0 success, 1 internal failure (e.g. solver), 2 usage,
//! 3 unreadable or invalid mesh / I/O, 4 degenerate class (report written),
//! 5 genus 0, 6 invalid conformal factor, 7 failed validation.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::canonical::{check_normalized, energy_of, run_canonical, CanonicalRun};
use crate::error::Error;
use crate::harmonic::harmonic_basis_with;
use crate::mesh::generate::{flat_torus, flat_torus_clifford_points, genus2_octagon};
use crate::mesh::io::{load_mesh_path, write_intrinsic_json, write_off, write_rho_ply};
use crate::mesh::TriangleMesh;
use crate::sparse::SolverOptions;
use crate::validate::{validate, Fault, ValidationConfig};

pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const DEGENERATE: i32 = 4;
    pub const ASSUMPTION: i32 = 5;
    pub const NORMALIZATION: i32 = 6;
    pub const VALIDATION: i32 = 7;
}

pub const STAR_SCHEME: &str = "cotan-lumped-barycentric";
pub const WEDGE_SCHEME: &str = "whitney";

#[derive(Parser, Debug)]
#[command(name = "harmcanon", version, about = "Canonical metrics of minimal harmonic energy on triangulated surfaces")]
struct Cli {
    /// Suppress log output.
    #[arg(long, global = true)]
    quiet: bool,
    /// Omit wall-clock timings from reports.
    #[arg(long, global = true)]
    no_timings: bool,
    /// Seed for the random conformal factors sampled by `validate`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated test surface.
    Generate(GenerateArgs),
    /// Compute the canonical conformal factor and write a run report.
    Canonical {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-face field output: `.ply` (binary, with `rho` and `rho_v`) or `.json` (array of rho).
        #[arg(long)]
        field_out: Option<PathBuf>,
    },
    /// Evaluate the harmonic energy of a given conformal factor.
    Energy {
        #[arg(long)]
        mesh: PathBuf,
        /// JSON array of per-face values, or an object keyed by face index.
        #[arg(long)]
        rho: PathBuf,
    },
    /// Run the invariant checks and print a JSON table.
    Validate {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Dump the orthonormal harmonic basis as JSON.
    Basis {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// `flat-torus` or `genus2`.
    #[arg(long)]
    shape: String,
    /// Grid size of the flat torus.
    #[arg(long)]
    resolution: Option<usize>,
    /// Midpoint subdivision levels of the genus-2 octagon.
    #[arg(long)]
    refinement: Option<usize>,
    /// `.off` (embedded shapes only) or `.json` (intrinsic mesh).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool_version: String,
    pub mesh: MeshSummary,
    pub discretization: Discretization,
    pub basis: BasisSummary,
    pub result: ResultSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeshSummary {
    pub source: String,
    pub vertex_count: usize,
    pub edge_count: usize,
    pub face_count: usize,
    pub genus: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Discretization {
    pub star_scheme: String,
    pub wedge_scheme: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct BasisSummary {
    pub count: usize,
    pub gram_residual: f64,
    pub closedness_residual: f64,
    pub coclosedness_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RhoStats {
    pub min: f64,
    pub max: f64,
    /// Unweighted mean over faces.
    pub mean: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultSummary {
    pub c_matrix: Vec<Vec<f64>>,
    pub c_sq: f64,
    pub integral_f: f64,
    pub min_f: f64,
    pub e_min: f64,
    pub degenerate: bool,
    pub rho_stats: RhoStats,
}

impl RunReport {
    pub fn new(source: &str, run: &CanonicalRun, timings: bool) -> Self {
        let topo = run.mesh.topology();
        let r = &run.result;
        let (min, max) = r.rho.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        let mean = r.rho.iter().sum::<f64>() / r.rho.len() as f64;
        RunReport {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            mesh: MeshSummary {
                source: source.to_string(),
                vertex_count: topo.vertex_count,
                edge_count: topo.edge_count,
                face_count: topo.face_count,
                genus: topo.genus,
            },
            discretization: Discretization { star_scheme: STAR_SCHEME.into(), wedge_scheme: WEDGE_SCHEME.into() },
            basis: BasisSummary {
                count: run.basis.len(),
                gram_residual: run.basis.gram_residual,
                closedness_residual: run.basis.closedness_residual,
                coclosedness_residual: run.basis.coclosedness_residual,
            },
            result: ResultSummary {
                c_matrix: r.c_matrix.clone(),
                c_sq: r.c_sq,
                integral_f: r.integral_f,
                min_f: r.min_f,
                e_min: r.e_min,
                degenerate: r.degenerate,
                rho_stats: RhoStats { min, max, mean },
            },
            timings_ms: timings.then(|| run.timings_ms.iter().map(|(k, v)| (k.to_string(), *v)).collect()),
        }
    }
}

/// A failure carrying its exit code.
struct Exit(i32, String);

impl From<Error> for Exit {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) | Error::Parse(_) | Error::Topology(_) | Error::Geometry(_) => exit::IO,
            Error::Assumption(_) => exit::ASSUMPTION,
            Error::Normalization(_) | Error::NonPositiveRho { .. } => exit::NORMALIZATION,
            _ => exit::FAILURE,
        };
        Exit(code, e.to_string())
    }
}

impl From<std::io::Error> for Exit {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type CmdResult = std::result::Result<i32, Exit>;

/// Parses `args` (including the program name) and runs one command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let rendered = e.render().to_string();
            let _ =
                if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let level = if cli.quiet { log::LevelFilter::Off } else { log::LevelFilter::Warn };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    log::set_max_level(level);

    let outcome = match &cli.command {
        Command::Generate(args) => cmd_generate(&cli, args, out),
        Command::Canonical { mesh, out: report, field_out } => cmd_canonical(&cli, mesh, report, field_out.as_deref()),
        Command::Energy { mesh, rho } => cmd_energy(mesh, rho, out),
        Command::Validate { mesh, inject_fault } => cmd_validate(&cli, mesh, inject_fault.as_deref(), out, err),
        Command::Basis { mesh, out: path } => cmd_basis(mesh, path),
    };
    match outcome {
        Ok(code) => code,
        Err(Exit(code, message)) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

fn usage(message: impl Into<String>) -> Exit {
    Exit(exit::USAGE, message.into())
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Exit> {
    File::create(path).map(BufWriter::new).map_err(|e| Exit(exit::IO, format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(mut w: impl Write, value: &T) -> std::result::Result<(), Exit> {
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn load(path: &Path) -> std::result::Result<TriangleMesh, Exit> {
    load_mesh_path(path).map_err(|e| {
        let Exit(code, message) = Exit::from(e);
        Exit(if code == exit::FAILURE { exit::IO } else { code }, format!("{}: {message}", path.display()))
    })
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs, out: &mut dyn Write) -> CmdResult {
    let ext = extension(&args.out);
    let mesh = match args.shape.as_str() {
        "flat-torus" => {
            let n = args.resolution.ok_or_else(|| usage("flat-torus requires --resolution"))?;
            if n < 2 {
                return Err(usage("--resolution must be at least 2"));
            }
            let mesh = flat_torus(n)?;
            match ext.as_str() {
                "off" if n < 3 => return Err(usage("OFF output needs --resolution >= 3; use .json for N = 2")),
                "off" => write_off(create(&args.out)?, &flat_torus_clifford_points(n), mesh.faces())?,
                "json" => write_intrinsic_json(create(&args.out)?, &mesh)?,
                _ => return Err(usage("output must end in .off or .json")),
            }
            mesh
        }
        "genus2" => {
            let r = args.refinement.ok_or_else(|| usage("genus2 requires --refinement"))?;
            if r < 1 {
                return Err(usage("--refinement must be at least 1"));
            }
            let mesh = genus2_octagon(r)?;
            match ext.as_str() {
                "json" => write_intrinsic_json(create(&args.out)?, &mesh)?,
                _ => return Err(usage("the genus-2 surface has no embedding; write it as .json")),
            }
            mesh
        }
        other => return Err(usage(format!("unknown shape '{other}' (expected flat-torus or genus2)"))),
    };
    if !cli.quiet {
        let t = mesh.topology();
        writeln!(
            out,
            "wrote {}: {} vertices, {} edges, {} faces, genus {}",
            args.out.display(),
            t.vertex_count,
            t.edge_count,
            t.face_count,
            t.genus
        )?;
    }
    Ok(exit::OK)
}

fn cmd_canonical(cli: &Cli, mesh_path: &Path, report_path: &Path, field_out: Option<&Path>) -> CmdResult {
    let mesh = load(mesh_path)?;
    let start = Instant::now();
    let run = run_canonical(&mesh, &SolverOptions::from_env())?;
    log::info!("canonical metric computed in {:.1} ms", start.elapsed().as_secs_f64() * 1e3);
    let report = RunReport::new(&mesh_path.display().to_string(), &run, !cli.no_timings);
    write_json(create(report_path)?, &report)?;
    if let Some(path) = field_out {
        match extension(path).as_str() {
            "ply" => write_rho_ply(create(path)?, &run.mesh, &run.result.rho, &run.result.rho_vertex)?,
            "json" => write_json(create(path)?, &run.result.rho)?,
            _ => return Err(usage("--field-out must end in .ply or .json")),
        }
    }
    if run.result.degenerate {
        return Err(Exit(exit::DEGENERATE, "degenerate class: f vanishes identically; report written".into()));
    }
    Ok(exit::OK)
}

fn read_rho(path: &Path, face_count: usize) -> std::result::Result<Vec<f64>, Exit> {
    let file = File::open(path).map_err(|e| Exit(exit::IO, format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Exit(exit::IO, format!("{}: invalid JSON: {e}", path.display())))?;
    let bad = |m: String| Exit(exit::NORMALIZATION, m);
    let mut rho = vec![f64::NAN; face_count];
    let entries: Vec<(usize, &serde_json::Value)> = match &value {
        serde_json::Value::Array(items) => items.iter().enumerate().collect(),
        serde_json::Value::Object(map) => map
            .iter()
            .map(|(k, v)| k.parse().map(|i| (i, v)).map_err(|_| bad(format!("face key '{k}' is not an index"))))
            .collect::<std::result::Result<_, _>>()?,
        _ => return Err(bad("rho must be a JSON array or an object keyed by face index".into())),
    };
    for (i, v) in entries {
        let slot = rho.get_mut(i).ok_or_else(|| bad(format!("face index {i} out of range")))?;
        *slot = v.as_f64().ok_or_else(|| bad(format!("rho[{i}] is not a number")))?;
    }
    if let Some(i) = rho.iter().position(|r| r.is_nan()) {
        return Err(bad(format!("rho has no value for face {i}")));
    }
    Ok(rho)
}

fn cmd_energy(mesh_path: &Path, rho_path: &Path, out: &mut dyn Write) -> CmdResult {
    let mesh = load(mesh_path)?;
    let rho = read_rho(rho_path, mesh.face_count())?;
    let run = run_canonical(&mesh, &SolverOptions::from_env())?;
    check_normalized(&run.mesh, &rho, 1)?;
    let energy = energy_of(&run.mesh, &run.wedge, &rho, 1)?;
    let e_min = run.result.e_min;
    #[derive(Serialize)]
    struct EnergyReport {
        energy: f64,
        e_min: f64,
        gap: f64,
    }
    write_json(out, &EnergyReport { energy, e_min, gap: energy - e_min })?;
    Ok(exit::OK)
}

fn cmd_validate(
    cli: &Cli,
    mesh_path: &Path,
    fault: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let fault = match fault {
        None => None,
        Some("corrupt-star1") => Some(Fault::CorruptStar1),
        Some(other) => return Err(usage(format!("unknown fault '{other}'"))),
    };
    let mesh = load(mesh_path)?;
    let config = ValidationConfig { seed: cli.seed, fault, ..ValidationConfig::default() };
    let report = validate(&mesh, &config)?;
    write_json(&mut *out, &report)?;
    match report.first_failure {
        None => Ok(exit::OK),
        Some(name) => {
            writeln!(err, "validation failed: {name}")?;
            Ok(exit::VALIDATION)
        }
    }
}

fn cmd_basis(mesh_path: &Path, out_path: &Path) -> CmdResult {
    let mesh = load(mesh_path)?.normalize_area();
    let basis = harmonic_basis_with(&mesh, &SolverOptions::from_env())?;
    #[derive(Serialize)]
    struct BasisDump<'a> {
        count: usize,
        /// Edge `e` runs from `edges[e][0]` to `edges[e][1]`.
        edges: &'a [[usize; 2]],
        #[serde(flatten)]
        basis: &'a crate::harmonic::HarmonicBasis,
    }
    let dump = BasisDump { count: basis.len(), edges: mesh.edges(), basis: &basis };
    write_json(create(out_path)?, &dump)?;
    Ok(exit::OK)
}
