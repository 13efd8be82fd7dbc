use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lsfem::flux::{flux_functional_value, solve_flux, BoundaryData, FluxProblem};
use lsfem::linalg::CgOptions;
use lsfem::mesh::{build_structured_triangle_mesh, read_mesh, write_mesh, Domain, Mesh};
use lsfem::norms::{flux_errors, pressure_errors, ErrorQuadrature};
use lsfem::penalty::PenaltyMode;
use lsfem::pressure::{build_lagrange_space, solve_pressure, PressureProblem};
use lsfem::problems::{problem_by_name, ManufacturedProblem};
use lsfem::reconstruction::{
    build_reconstruction_with, default_patch_size, estimate_lambda, PatchOrdering,
};
use lsfem::study::{comparison_csv, level_sizes, run_comparison, run_convergence, StudyConfig};

#[derive(Parser)]
#[command(
    name = "lsfem",
    version,
    about = "Sequential least-squares finite elements for the Poisson equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flux then pressure on one mesh; prints a CSV row of errors.
    Solve(SolveArgs),
    /// Refinement study on structured meshes n = 10, 20, 40, ...
    Convergence(StudyArgs),
    /// Flux DOFs against flux error for this method and the coupled solver.
    CompareDls(StudyArgs),
    /// Per-element patch sizes, depths and stability estimates.
    PatchStats(PatchArgs),
    /// Writes a structured triangle mesh in the text format.
    MeshGen(MeshGenArgs),
}

#[derive(Clone, Debug)]
enum MeshSource {
    Structured(usize),
    File(PathBuf),
}

impl FromStr for MeshSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.split_once(':') {
            Some(("structured", n)) => n
                .parse()
                .map(MeshSource::Structured)
                .map_err(|_| format!("bad subdivision count '{n}'")),
            Some(("file", path)) => Ok(MeshSource::File(path.into())),
            _ => Err("expected structured:<n> or file:<path>".into()),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Penalty {
    GlobalH,
    FaceH,
}

impl From<Penalty> for PenaltyMode {
    fn from(p: Penalty) -> Self {
        match p {
            Penalty::GlobalH => PenaltyMode::GlobalH,
            Penalty::FaceH => PenaltyMode::FaceH,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Ordering {
    Distance,
    Id,
}

impl From<Ordering> for PatchOrdering {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Distance => PatchOrdering::Distance,
            Ordering::Id => PatchOrdering::ElementId,
        }
    }
}

#[derive(Args, Clone)]
struct Common {
    /// ex1, ex3 or ex4.
    #[arg(long, default_value = "ex1")]
    problem: String,
    /// Flux degree.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    m: u8,
    #[arg(long)]
    patch_size: Option<usize>,
    #[arg(long, value_enum, default_value_t = Ordering::Distance)]
    patch_order: Ordering,
    #[arg(long, value_enum, default_value_t = Penalty::GlobalH)]
    penalty: Penalty,
    /// Relative residual of the CG solves.
    #[arg(long, default_value_t = lsfem::linalg::DEFAULT_TOLERANCE)]
    tol: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn m(&self) -> usize {
        self.m as usize
    }

    fn problem(&self) -> Result<ManufacturedProblem> {
        Ok(problem_by_name(&self.problem)?)
    }

    fn cg(&self) -> CgOptions {
        CgOptions {
            tol: self.tol,
            ..CgOptions::default()
        }
    }

    fn patch_size(&self) -> usize {
        self.patch_size
            .unwrap_or_else(|| default_patch_size(self.m(), 2))
    }

    fn pressure_degree(&self, requested: Option<usize>) -> usize {
        let m = self.m();
        let d = requested.unwrap_or(m);
        if d != m && d + 1 != m {
            log::warn!("pressure degree {d} with flux degree {m}: only m and m - 1 are the studied pairings");
        }
        d
    }

    fn write(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => {
                std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
            }
            None => io::stdout()
                .write_all(text.as_bytes())
                .context("writing stdout"),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Defaults to m.
    #[arg(long)]
    pressure_degree: Option<usize>,
    #[arg(long, default_value = "structured:10")]
    mesh: MeshSource,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    pressure_degree: Option<usize>,
    #[arg(long, default_value_t = 4)]
    levels: usize,
}

#[derive(Args)]
struct PatchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "structured:10")]
    mesh: MeshSource,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DomainArg {
    Square,
    LShape,
}

#[derive(Args)]
struct MeshGenArgs {
    #[arg(long, value_enum, default_value_t = DomainArg::Square)]
    domain: DomainArg,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_mesh(source: &MeshSource, domain: Domain) -> Result<Mesh> {
    Ok(match source {
        MeshSource::Structured(n) => build_structured_triangle_mesh(*n, domain)?,
        MeshSource::File(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            read_mesh(BufReader::new(file))
                .with_context(|| format!("reading {}", path.display()))?
        }
    })
}

const SOLVE_HEADER: &str =
    "problem,m,pressure_degree,elements,dofs_flux,dofs_pressure,functional,err_p_l2,err_p_energy,err_u_l2,err_u_energy";

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let c = &args.common;
    let p = c.problem()?;
    let m = c.m();
    let mesh = load_mesh(&args.mesh, p.domain)?;
    let penalty = c.penalty.into();
    let op = build_reconstruction_with(&mesh, m, c.patch_size(), c.patch_order.into())?;
    let problem = FluxProblem {
        mesh: &mesh,
        reconstruction: &op,
        source: &p.f,
        boundary: BoundaryData::Dirichlet {
            g: &p.u,
            grad_g: Some(&p.grad_u),
        },
        penalty,
    };
    let flux = solve_flux(&problem, c.cg())?;
    let fe = flux_errors(
        &mesh,
        &flux.field,
        &p,
        penalty,
        &ErrorQuadrature::for_problem(m, &p),
    );
    eprintln!(
        "flux: {} elements, {} dofs, {} CG iterations, functional {:.6e}",
        mesh.num_elements(),
        flux.num_dofs(),
        flux.iterations,
        flux_functional_value(&problem, &flux.field)
    );
    let mut pressure_cols = [String::new(), String::new(), String::new(), String::new()];
    if mesh.is_simplicial() {
        let m_u = c.pressure_degree(args.pressure_degree);
        let space = build_lagrange_space(&mesh, m_u)?;
        let sol = solve_pressure(
            &PressureProblem {
                mesh: &mesh,
                space: &space,
                flux: &flux.field,
                flux_degree: m,
                boundary: &p.u,
                penalty,
            },
            c.cg(),
        )?;
        let pe = pressure_errors(
            &mesh,
            &sol.field,
            &p,
            penalty,
            &ErrorQuadrature::for_problem(m.max(m_u), &p),
        );
        eprintln!(
            "pressure: degree {m_u}, {} dofs, {} CG iterations, functional {:.6e}",
            sol.num_dofs(),
            sol.iterations,
            sol.functional
        );
        pressure_cols = [
            m_u.to_string(),
            sol.num_dofs().to_string(),
            format!("{:.6e}", pe.l2),
            format!("{:.6e}", pe.energy),
        ];
    } else {
        eprintln!("mesh has polygonal elements: pressure skipped, flux only");
    }
    let [deg, dofs, ul2, uen] = pressure_cols;
    c.write(&format!(
        "{SOLVE_HEADER}\n{},{m},{deg},{},{},{dofs},{:.6e},{:.6e},{:.6e},{ul2},{uen}\n",
        p.name,
        mesh.num_elements(),
        flux.num_dofs(),
        flux.functional,
        fe.l2,
        fe.energy
    ))
}

fn study_config(args: &StudyArgs) -> Result<StudyConfig> {
    let c = &args.common;
    if args.levels < 2 {
        bail!("--levels must be at least 2 to compute orders");
    }
    let mut config = StudyConfig::new(c.problem()?, c.m(), level_sizes(args.levels));
    config.patch_size = c.patch_size;
    config.patch_ordering = c.patch_order.into();
    config.penalty = c.penalty.into();
    config.cg = c.cg();
    Ok(config)
}

fn cmd_convergence(args: &StudyArgs) -> Result<()> {
    let mut config = study_config(args)?;
    config.pressure_degrees = vec![args.common.pressure_degree(args.pressure_degree)];
    let reports = run_convergence(&config)?;
    args.common.write(&reports[0].to_csv())
}

fn cmd_compare(args: &StudyArgs) -> Result<()> {
    let config = study_config(args)?;
    let rows = run_comparison(&config)?;
    args.common.write(&comparison_csv(&rows))
}

fn cmd_patch_stats(args: &PatchArgs) -> Result<()> {
    let c = &args.common;
    let p = c.problem()?;
    let mesh = load_mesh(&args.mesh, p.domain)?;
    let op = build_reconstruction_with(&mesh, c.m(), c.patch_size(), c.patch_order.into())?;
    let mut out = String::from("element,size,depth,lambda,conditioning\n");
    let (mut lmax, mut size_max, mut size_min) = (0.0f64, 0, usize::MAX);
    for (k, e) in op.elements().iter().enumerate() {
        let lambda = estimate_lambda(&mesh, &e.patch, c.m());
        lmax = lmax.max(lambda);
        size_max = size_max.max(e.patch.len());
        size_min = size_min.min(e.patch.len());
        out.push_str(&format!(
            "{k},{},{},{lambda:.6},{:.6e}\n",
            e.patch.len(),
            e.patch.depth,
            e.conditioning
        ));
    }
    eprintln!(
        "{} elements, patch sizes {size_min}..{size_max} (target {}), max lambda {lmax:.3}",
        mesh.num_elements(),
        c.patch_size()
    );
    c.write(&out)
}

fn cmd_mesh_gen(args: &MeshGenArgs) -> Result<()> {
    let domain = match args.domain {
        DomainArg::Square => Domain::UnitSquare,
        DomainArg::LShape => Domain::LShape,
    };
    let mesh = build_structured_triangle_mesh(args.n, domain)?;
    let mut buf = Vec::new();
    write_mesh(&mesh, &mut buf)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
        }
        None => io::stdout().write_all(&buf).context("writing stdout"),
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("LSFEM_THREADS") {
        let n: usize = v.parse().with_context(|| format!("LSFEM_THREADS='{v}'"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    init_threads()?;
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Convergence(a) => cmd_convergence(a),
        Command::CompareDls(a) => cmd_compare(a),
        Command::PatchStats(a) => cmd_patch_stats(a),
        Command::MeshGen(a) => cmd_mesh_gen(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<lsfem::Error>() {
                Some(lsfem::Error::UnknownProblem { .. }) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
