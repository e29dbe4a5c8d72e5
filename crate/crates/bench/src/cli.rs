//! The `hsim-bench` command line.
//!
//! Exit codes: 0 success, 1 run failure, 2 bad input (usage, unreadable
//! mesh or config), 3 solver finished without converging (artifacts are
//! still written).

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hsim::applications::{
    default_hks_times, heat_kernel_signature, parse_correspondence, projection_error, similar_points, spectral_projection,
    write_similarity_csv, write_vertex_csv, DEFAULT_SIMILARITY_THRESHOLD,
};
use hsim::geodesics::{DistanceScheme, DEFAULT_STVD_WINDOW};
use hsim::matrix_market::write_symmetric;
use hsim::mesh::{write_off, write_off_with_scalars, EdgeGraph, TriangleMesh};
use hsim::sampling::{build_hierarchy, build_pds_hierarchy, SamplingMethod};
use hsim::solver::{solution_header, write_solution_csv, SolverConfig};
use serde_json::json;

use crate::config::{ExperimentConfig, GeneratedShape, MeshSource, SolverChoice};
use crate::experiment::run_table;
use crate::plot::{csv_to_svg, PlotOptions};
use crate::run::{run_solver, ExtraOptions, Problem};
use crate::tolerance::run_tolerance_study;

#[derive(Debug, Parser)]
#[command(name = "hsim-bench", version, about = "Eigensolver experiments on triangle meshes")]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one eigenproblem and write the solution, log and timings.
    Solve(SolveArgs),
    /// Run a table experiment described by a config file.
    Table(TableArgs),
    /// Compare tolerance-induced and discretization-induced spectrum errors.
    ToleranceStudy(ToleranceArgs),
    /// Dump the sampling hierarchy as JSON.
    Hierarchy(HierarchyArgs),
    /// Write a built-in test shape as OFF.
    Generate(GenerateArgs),
    /// Render a CSV of curves as an SVG line plot.
    Plot(PlotArgs),
    /// Write stiffness (or Hamiltonian) and mass matrices in MatrixMarket format.
    ExportOperators(ExportArgs),
    /// Heat kernel signatures, similar points or spectral projection.
    Apply(ApplyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverFlag {
    Hsim,
    Dense,
    Bpcg,
    Coarse,
}

impl From<SolverFlag> for SolverChoice {
    fn from(s: SolverFlag) -> Self {
        match s {
            SolverFlag::Hsim => SolverChoice::Hsim,
            SolverFlag::Dense => SolverChoice::Dense,
            SolverFlag::Bpcg => SolverChoice::Bpcg,
            SolverFlag::Coarse => SolverChoice::Coarse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceFlag {
    Dijkstra,
    Stvd,
    Heat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplingFlag {
    Fps,
    Pds,
}

/// Solver settings shared by several subcommands.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Mesh file (.off/.obj) or `generated:<shape>:<resolution>`.
    #[arg(long)]
    pub mesh: String,
    #[arg(long, default_value_t = 100)]
    pub eigs: usize,
    /// Relative eigenvalue change at which a level is converged.
    #[arg(long, default_value_t = 1e-2)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = DistanceFlag::Dijkstra)]
    pub distance: DistanceFlag,
    #[arg(long, default_value_t = DEFAULT_STVD_WINDOW)]
    pub stvd_window: usize,
    #[arg(long, default_value_t = 1.0)]
    pub heat_tau_scale: f64,
    #[arg(long, value_enum, default_value_t = SamplingFlag::Fps)]
    pub sampling: SamplingFlag,
    #[arg(long, default_value_t = 0)]
    pub fps_seed: usize,
    #[arg(long)]
    pub hier_coarse_factor: Option<f64>,
    #[arg(long)]
    pub hier_ratio: Option<f64>,
    #[arg(long)]
    pub basis_radius_factor: Option<f64>,
    /// Curvature potential weight; 0 solves the plain Laplace–Beltrami problem.
    #[arg(long, default_value_t = 0.0)]
    pub hamiltonian_t: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Iteration cap per level (HSIM) or in total (block PCG).
    #[arg(long)]
    pub max_iters: Option<usize>,
}

impl SolverArgs {
    pub fn extra_options(&self) -> ExtraOptions {
        ExtraOptions { bpcg_max_iterations: self.max_iters, ..Default::default() }
    }

    pub fn distance_scheme(&self) -> DistanceScheme {
        match self.distance {
            DistanceFlag::Dijkstra => DistanceScheme::Dijkstra,
            DistanceFlag::Stvd => DistanceScheme::Stvd { window: self.stvd_window },
            DistanceFlag::Heat => DistanceScheme::Heat { tau_scale: self.heat_tau_scale },
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut c = SolverConfig::new(self.eigs).with_tolerance(self.tol).with_distance(self.distance_scheme());
        c.sampling = match self.sampling {
            SamplingFlag::Fps => SamplingMethod::Fps,
            SamplingFlag::Pds => SamplingMethod::Pds,
        };
        c.fps_seed = self.fps_seed;
        c.seed = self.seed;
        if let Some(f) = self.hier_coarse_factor {
            c.hierarchy.coarse_factor = f;
        }
        if let Some(r) = self.hier_ratio {
            c.hierarchy.max_ratio = r;
        }
        if let Some(r) = self.basis_radius_factor {
            c.basis.radius_factor = r;
        }
        if let Some(m) = self.max_iters {
            c.max_iters_per_level = m;
        }
        c
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub solver_args: SolverArgs,
    #[arg(long, value_enum, default_value_t = SolverFlag::Hsim)]
    pub solver: SolverFlag,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    #[arg(long)]
    pub mesh_a: String,
    #[arg(long)]
    pub mesh_b: String,
    /// One vertex index of the second mesh per line, for each vertex of the first.
    #[arg(long)]
    pub correspondence: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-4")]
    pub tolerances: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub eigs: usize,
    #[arg(long, default_value_t = 0)]
    pub fps_seed: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Also render the curves as SVG.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HierarchyArgs {
    #[arg(long)]
    pub mesh: String,
    #[arg(long, default_value_t = 100)]
    pub eigs: usize,
    #[arg(long, value_enum, default_value_t = SamplingFlag::Fps)]
    pub sampling: SamplingFlag,
    #[arg(long, default_value_t = 0)]
    pub fps_seed: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub hier_coarse_factor: Option<f64>,
    #[arg(long)]
    pub hier_ratio: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// icosphere, cube_sphere, bumpy, bumpy_icosphere, star or torus.
    #[arg(long)]
    pub shape: String,
    #[arg(long)]
    pub resolution: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "")]
    pub title: String,
    /// Linear instead of logarithmic y axis.
    #[arg(long)]
    pub linear: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub mesh: String,
    #[arg(long, default_value_t = 0.0)]
    pub hamiltonian_t: f64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Hks,
    Similar,
    Project,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[command(flatten)]
    pub solver_args: SolverArgs,
    #[arg(long, value_enum)]
    pub task: Task,
    /// Source vertex for `similar`.
    #[arg(long, default_value_t = 0)]
    pub source: usize,
    /// Diffusion time for `similar`; defaults to `4 ln 10 / λ_max`.
    #[arg(long)]
    pub time: Option<f64>,
    /// Number of signature times for `hks`.
    #[arg(long, default_value_t = 8)]
    pub hks_times: usize,
    /// Similar iff the signature distance is at most this multiple of the median.
    #[arg(long, default_value_t = DEFAULT_SIMILARITY_THRESHOLD)]
    pub similarity_quantile: f64,
    /// Basis sizes for `project`.
    #[arg(long, value_delimiter = ',', default_value = "10,50,100")]
    pub project_counts: Vec<usize>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

/// Error with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn run(message: impl ToString) -> Self {
        Self { code: 1, message: message.to_string() }
    }
}

type CliResult = Result<ExitCode, CliError>;

pub fn load_mesh_arg(text: &str) -> Result<TriangleMesh, CliError> {
    let source = MeshSource::parse(text).map_err(CliError::input)?;
    source.load(None).map_err(|e| CliError::input(format!("cannot load mesh {text}: {e}")))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::run(format!("cannot create {}: {e}", dir.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::run(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(CliError::run)?;
    fs::write(path, text + "\n").map_err(|e| CliError::run(format!("cannot write {}: {e}", path.display())))
}

pub fn run(cli: Cli) -> ExitCode {
    if cli.threads > 0 {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Table(a) => table(a),
        Command::ToleranceStudy(a) => tolerance_study(a),
        Command::Hierarchy(a) => hierarchy(a),
        Command::Generate(a) => generate(a),
        Command::Plot(a) => plot(a),
        Command::ExportOperators(a) => export_operators(a),
        Command::Apply(a) => apply(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn solve(args: SolveArgs) -> CliResult {
    let mesh = load_mesh_arg(&args.solver_args.mesh)?;
    let config = args.solver_args.solver_config();
    let problem = Problem::assemble(&mesh, args.solver_args.hamiltonian_t).map_err(|e| CliError::input(e.to_string()))?;
    let outcome = run_solver(args.solver.into(), &mesh, &problem, &config, &args.solver_args.extra_options()).map_err(CliError::run)?;

    create_dir(&args.out_dir)?;
    let header = solution_header(&outcome.solution, outcome.log.as_ref());
    write_json(&args.out_dir.join("solution.json"), &serde_json::to_value(&header).map_err(CliError::run)?)?;
    write_solution_csv(&outcome.solution, create(&args.out_dir.join("eigenvectors.csv"))?).map_err(CliError::run)?;
    let mut w = csv::Writer::from_writer(create(&args.out_dir.join("residuals.csv"))?);
    w.write_record(["index", "eigenvalue", "residual"]).map_err(CliError::run)?;
    for (i, (l, r)) in outcome.solution.eigenvalues.iter().zip(&outcome.solution.residuals).enumerate() {
        w.write_record([i.to_string(), format!("{l:e}"), format!("{r:e}")]).map_err(CliError::run)?;
    }
    w.flush().map_err(CliError::run)?;
    let timing = json!({
        "solver": outcome.solution.solver.name(),
        "iterations": outcome.iteration_record(),
        "converged": outcome.converged(),
        "vertices": mesh.vertex_count(),
        "eigs": config.num_eigs,
        "hamiltonian_t": problem.hamiltonian_t,
        "wall_clock_seconds_machine_dependent": {
            "assembly": problem.assembly_seconds,
            "hierarchy": outcome.setup_seconds,
            "solve": outcome.solve_seconds(),
            "total": outcome.total_seconds,
        },
    });
    write_json(&args.out_dir.join("timing.json"), &timing)?;
    println!(
        "{} {} pairs on {} vertices: {} in {:.3}s, median residual {:.3e}",
        outcome.solution.solver.name(),
        outcome.solution.len(),
        mesh.vertex_count(),
        outcome.iteration_record(),
        outcome.total_seconds,
        outcome.solution.median_residual()
    );
    if outcome.converged() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("warning: solver did not converge; partial results written to {}", args.out_dir.display());
        Ok(ExitCode::from(3))
    }
}

fn table(args: TableArgs) -> CliResult {
    let config = ExperimentConfig::load(&args.config).map_err(|e| CliError::input(e.to_string()))?;
    let base = args.config.parent().map(Path::to_path_buf);
    let report = run_table(&config, base.as_deref());
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    report.write_csv(create(&args.out)?).map_err(CliError::run)?;
    let failures = report.column("error").map_or(0, |c| report.rows.iter().filter(|r| !r[c].is_empty()).count());
    println!("{} rows written to {} ({} with errors or notes)", report.rows.len(), args.out.display(), failures);
    Ok(ExitCode::SUCCESS)
}

fn tolerance_study(args: ToleranceArgs) -> CliResult {
    let a = load_mesh_arg(&args.mesh_a)?;
    let b = load_mesh_arg(&args.mesh_b)?;
    let map = match &args.correspondence {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
            Some(parse_correspondence(&text, b.vertex_count()).map_err(|e| CliError::input(e.to_string()))?)
        }
        None => None,
    };
    let mut config = SolverConfig::new(args.eigs);
    config.fps_seed = args.fps_seed;
    let study = run_tolerance_study(&a, &b, map.as_deref(), &args.tolerances, &config).map_err(CliError::run)?;
    study.write_csv(create(&args.out)?).map_err(CliError::run)?;
    for (i, c) in study.curves.iter().enumerate() {
        println!("eps {:e}: below inter-mesh curve at {:.1}% of indices", c.tolerance, 100.0 * study.fraction_below(i));
    }
    if let Some(svg_path) = &args.plot {
        let text = fs::read_to_string(&args.out).map_err(CliError::run)?;
        let svg = csv_to_svg(&text, "relative eigenvalue differences", &PlotOptions::default()).map_err(CliError::run)?;
        fs::write(svg_path, svg).map_err(CliError::run)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn hierarchy(args: HierarchyArgs) -> CliResult {
    let mesh = load_mesh_arg(&args.mesh)?;
    let graph = EdgeGraph::from_mesh(&mesh).map_err(|e| CliError::input(e.to_string()))?;
    let mut params = hsim::sampling::HierarchyParams::default();
    if let Some(f) = args.hier_coarse_factor {
        params.coarse_factor = f;
    }
    if let Some(r) = args.hier_ratio {
        params.max_ratio = r;
    }
    let h = match args.sampling {
        SamplingFlag::Fps => build_hierarchy(&graph, args.eigs, &params, args.fps_seed),
        SamplingFlag::Pds => build_pds_hierarchy(&mesh, &graph, args.eigs, &params, args.seed),
    }
    .map_err(CliError::run)?;
    fs::write(&args.out, h.to_json()).map_err(CliError::run)?;
    println!("levels {:?}", h.level_sizes());
    Ok(ExitCode::SUCCESS)
}

fn generate(args: GenerateArgs) -> CliResult {
    let source = MeshSource::parse(&format!("generated:{}:{}", args.shape, args.resolution)).map_err(CliError::input)?;
    let mesh = source.load(None).map_err(CliError::run)?;
    write_off(&mesh, create(&args.out)?).map_err(CliError::run)?;
    println!("{} vertices, {} triangles", mesh.vertex_count(), mesh.triangle_count());
    Ok(ExitCode::SUCCESS)
}

fn plot(args: PlotArgs) -> CliResult {
    let text = fs::read_to_string(&args.csv).map_err(|e| CliError::input(format!("cannot read {}: {e}", args.csv.display())))?;
    let options = PlotOptions { log_y: !args.linear, ..Default::default() };
    let svg = csv_to_svg(&text, &args.title, &options).map_err(|e| CliError::input(e.to_string()))?;
    fs::write(&args.out, svg).map_err(CliError::run)?;
    Ok(ExitCode::SUCCESS)
}

fn export_operators(args: ExportArgs) -> CliResult {
    let mesh = load_mesh_arg(&args.mesh)?;
    let problem = Problem::assemble(&mesh, args.hamiltonian_t).map_err(|e| CliError::input(e.to_string()))?;
    create_dir(&args.out_dir)?;
    let name = if args.hamiltonian_t == 0.0 { "stiffness.mtx" } else { "hamiltonian.mtx" };
    write_symmetric(&problem.operator, create(&args.out_dir.join(name))?).map_err(CliError::run)?;
    write_symmetric(&problem.mass, create(&args.out_dir.join("mass.mtx"))?).map_err(CliError::run)?;
    Ok(ExitCode::SUCCESS)
}

fn apply(args: ApplyArgs) -> CliResult {
    let mesh = load_mesh_arg(&args.solver_args.mesh)?;
    let config = args.solver_args.solver_config();
    let problem = Problem::assemble(&mesh, args.solver_args.hamiltonian_t).map_err(|e| CliError::input(e.to_string()))?;
    let outcome = run_solver(SolverChoice::Hsim, &mesh, &problem, &config, &ExtraOptions::default()).map_err(CliError::run)?;
    let sol = &outcome.solution;
    create_dir(&args.out_dir)?;
    match args.task {
        Task::Hks => {
            let times = default_hks_times(&sol.eigenvalues, args.hks_times).map_err(CliError::run)?;
            let hks = heat_kernel_signature(sol, &times).map_err(CliError::run)?;
            let names: Vec<String> = times.iter().map(|t| format!("hks_t{t:.4e}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            write_vertex_csv(&refs, hks.as_ref(), create(&args.out_dir.join("hks.csv"))?).map_err(CliError::run)?;
            let cols: Vec<Vec<f64>> = (0..times.len()).map(|c| hks.col(c).iter().copied().collect()).collect();
            let fields: Vec<(&str, &[f64])> = refs.iter().zip(&cols).map(|(n, c)| (*n, c.as_slice())).collect();
            write_off_with_scalars(&mesh, &fields, create(&args.out_dir.join("hks.off"))?).map_err(CliError::run)?;
        }
        Task::Similar => {
            let t = match args.time {
                Some(t) => t,
                None => default_hks_times(&sol.eigenvalues, 2).map_err(CliError::run)?[0],
            };
            let sim = similar_points(sol, &problem.mass, args.source, t, args.similarity_quantile).map_err(|e| CliError::input(e.to_string()))?;
            write_similarity_csv(&sim, create(&args.out_dir.join("similar.csv"))?).map_err(CliError::run)?;
            let labels: Vec<f64> = sim.labels.iter().map(|&l| f64::from(u8::from(l))).collect();
            write_off_with_scalars(&mesh, &[("distance", &sim.distances), ("similar", &labels)], create(&args.out_dir.join("similar.off"))?)
                .map_err(CliError::run)?;
            println!("{} similar vertices at t = {t:.4e}", sim.labels.iter().filter(|&&l| l).count());
        }
        Task::Project => {
            let mut w = csv::Writer::from_writer(create(&args.out_dir.join("projection_error.csv"))?);
            w.write_record(["basis_size", "mass_norm_error"]).map_err(CliError::run)?;
            for &n in &args.project_counts {
                let p = spectral_projection(&mesh, sol, &problem.mass, n).map_err(|e| CliError::input(e.to_string()))?;
                let err = projection_error(&mesh, &problem.mass, &p);
                w.write_record([n.to_string(), format!("{err:e}")]).map_err(CliError::run)?;
                let projected = TriangleMesh::new(p, mesh.triangles().to_vec()).map_err(CliError::run)?;
                write_off(&projected, create(&args.out_dir.join(format!("projection_{n}.off")))?).map_err(CliError::run)?;
            }
            w.flush().map_err(CliError::run)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Names accepted by `generate --shape`.
pub fn shape_names() -> Vec<&'static str> {
    GeneratedShape::all().iter().map(|g| g.name()).collect()
}
