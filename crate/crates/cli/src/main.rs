use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use poisson_brw::dynamics::{init_particles, run, DynamicsParams, InitialCondition, Observable, Observer};
use poisson_brw::geometry::io::{load_graph, save_graph};
use poisson_brw::geometry::{palm_condition, sample_poisson_cloud, PercolationSpec, RateGraph, Topology};
use poisson_brw::harness::{
    corrector_sigma2, emit_report, load_config, msd_sigma2, quote, run_hydro_experiment, HydroOptions,
};
use poisson_brw::homogenize::{generator_l2_decay, solve_resolvent};
use poisson_brw::pde::{fd_solve, gaussian_solution, Boundary, DensityField, Grid, InitialDensity, PdeProblem};
use poisson_brw::rng::{derive_seed, TAG_PERCOLATION, TAG_REPLICA};
use poisson_brw::testfn::TestFunction;
use poisson_brw::{Error, Graph, Result};

#[derive(Parser)]
#[command(name = "pbrw", version, about = "Branching random walks on Poisson point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a Poisson cloud, build the rate graph and write it as text.
    GenGraph(GenGraph),
    /// Run replicas of the particle system on a stored graph.
    Simulate(Simulate),
    /// Estimate the effective diffusivity of a stored periodic graph.
    Sigma(Sigma),
    /// Solve the discrete resolvent problem at several scales.
    ResolventCheck(ResolventCheck),
    /// Evaluate the limiting equation for Gaussian initial data.
    Pde(Pde),
    /// Run a hydrodynamic experiment described by a TOML file.
    Hydro(Hydro),
}

#[derive(Clone, Copy, ValueEnum)]
enum PercolationKind {
    None,
    Longrange,
    Scalefree,
}

#[derive(clap::Args)]
struct GenGraph {
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long)]
    side: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = poisson_brw::geometry::DEFAULT_CUTOFF)]
    cutoff: f64,
    #[arg(long, default_value = "free")]
    topology: Topology,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add a point at the box center.
    #[arg(long)]
    palm: bool,
    #[arg(long, value_enum, default_value = "none")]
    percolation: PercolationKind,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct Simulate {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    scale: f64,
    #[arg(long, default_value_t = 0.0)]
    b: f64,
    #[arg(long, default_value_t = 0.0)]
    d: f64,
    #[arg(long = "T")]
    horizon: f64,
    #[arg(long, default_value = "const:1")]
    ic: String,
    #[arg(long, default_value_t = 1)]
    replicas: usize,
    /// Comma-separated observation times; the horizon is always recorded.
    #[arg(long, value_delimiter = ',')]
    obs_times: Vec<f64>,
    /// Observed test function, repeatable (default `const:1`, the total mass).
    #[arg(long)]
    testfn: Vec<String>,
    /// Count ghosts and report their total on stderr.
    #[arg(long)]
    ghosts: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SigmaMethodArg {
    Corrector,
    Msd,
    Both,
}

#[derive(clap::Args)]
struct Sigma {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "corrector")]
    method: SigmaMethodArg,
    #[arg(long, default_value_t = poisson_brw::homogenize::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 50.0)]
    tmax: f64,
    #[arg(long, default_value_t = 1000)]
    walkers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ResolventCheck {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
    scales: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long)]
    sigma2: f64,
    #[arg(long, default_value = "gauss:1,1")]
    testfn: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PdeMethod {
    Exact,
    Fd,
}

#[derive(clap::Args)]
struct Pde {
    #[arg(long)]
    sigma2: f64,
    #[arg(long, default_value_t = 0.0)]
    rnet: f64,
    /// `gauss:A,s[,c...]`.
    #[arg(long)]
    rho0: String,
    #[arg(long = "T")]
    horizon: f64,
    #[arg(long, default_value_t = 0.1)]
    grid: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, value_enum, default_value = "exact")]
    method: PdeMethod,
    /// Half-width of the output box; defaults to six evolved widths.
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct Hydro {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    fixed_cloud: bool,
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenGraph(a) => gen_graph(a),
        Command::Simulate(a) => simulate(a),
        Command::Sigma(a) => sigma(a),
        Command::ResolventCheck(a) => resolvent_check(a),
        Command::Pde(a) => pde(a),
        Command::Hydro(a) => return hydro(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn write_output(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, body).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => std::io::stdout().write_all(body.as_bytes()).map_err(|e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
    }
}

fn gen_graph(a: GenGraph) -> Result<()> {
    let cloud = sample_poisson_cloud(a.gamma, a.side, a.dim, a.topology, a.seed)?;
    let cloud = if a.palm { palm_condition(cloud)? } else { cloud };
    let kind = match a.percolation {
        PercolationKind::None => "none",
        PercolationKind::Longrange => "longrange",
        PercolationKind::Scalefree => "scalefree",
    };
    let spec = PercolationSpec::from_parts(kind, a.alpha, a.beta, a.tau)?;
    let graph = RateGraph::build(cloud, a.cutoff)?;
    let graph = spec.apply(graph, derive_seed(a.seed, &[TAG_PERCOLATION]))?;
    save_graph(&graph, &a.out)?;
    eprintln!("{} points, {} directed edges", graph.len(), graph.edge_count());
    Ok(())
}

fn simulate(a: Simulate) -> Result<()> {
    let graph: Graph = load_graph(&a.graph)?;
    let dim = graph.cloud().dim();
    let ic = InitialCondition::parse(&a.ic, dim)?;
    let params = DynamicsParams::new(a.scale, a.b, a.d)?;
    let specs = if a.testfn.is_empty() { vec!["const:1".to_string()] } else { a.testfn.clone() };
    let mut times: Vec<f64> = a.obs_times.iter().copied().filter(|&t| t < a.horizon).collect();
    times.push(a.horizon);
    let observers = specs
        .iter()
        .map(|s| Ok(Observer::new(s.clone(), Observable::Test(TestFunction::parse(s, dim)?), times.clone())))
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<Result<(String, u64)>> = (0..a.replicas)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(a.seed, &[TAG_REPLICA, r as u64]);
            let state = init_particles(&graph, &ic, params, seed)?;
            let mut state = if a.ghosts { state.with_ghosts() } else { state };
            let rec = run(&mut state, a.horizon, &observers)?;
            let mut out = String::new();
            for tr in &rec.traces {
                for (i, res) in tr.dynkin_residual().iter().enumerate() {
                    let c = tr.counts[i];
                    let _ = writeln!(
                        out,
                        "{r},{},{},{},{},{},{},{},{res}",
                        tr.times[i],
                        quote(&tr.id),
                        tr.values[i],
                        tr.totals[i],
                        c.jumps,
                        c.births,
                        c.deaths
                    );
                }
            }
            Ok((out, state.ghosts().map(|g| g.iter().sum()).unwrap_or(0)))
        })
        .collect();
    let mut body = String::from("replica,time,observable_id,value,total_alive,jumps,births,deaths,dynkin_residual\n");
    let mut ghosts = 0;
    for r in results {
        let (rows, g) = r?;
        body.push_str(&rows);
        ghosts += g;
    }
    if a.ghosts {
        eprintln!("ghosts over all replicas: {ghosts}");
    }
    write_output(a.out.as_deref(), &body)
}

fn sigma(a: Sigma) -> Result<()> {
    let graph: Graph = load_graph(&a.graph)?;
    let mut estimates = Vec::new();
    if a.method != SigmaMethodArg::Msd {
        estimates.push(corrector_sigma2(&graph, a.tol)?);
    }
    if a.method != SigmaMethodArg::Corrector {
        estimates.push(msd_sigma2(&graph, a.tmax, a.walkers, a.seed)?);
    }
    let body = if estimates.len() == 1 {
        serde_json::to_string_pretty(&estimates[0])?
    } else {
        serde_json::to_string_pretty(&estimates)?
    };
    write_output(a.out.as_deref(), &(body + "\n"))
}

fn resolvent_check(a: ResolventCheck) -> Result<()> {
    let graph: Graph = load_graph(&a.graph)?;
    let g = TestFunction::parse(&a.testfn, graph.cloud().dim())?;
    let decay = generator_l2_decay(&graph, &a.scales, &g);
    let mut body = String::from("N,lambda,residual,iterations,l1_distance,l2_distance,generator_decay\n");
    for (&n, dec) in a.scales.iter().zip(decay) {
        let s = solve_resolvent(&graph, n, a.lambda, &g, a.sigma2, a.tol)?;
        let _ = writeln!(
            body,
            "{n},{},{},{},{},{},{dec}",
            a.lambda, s.residual, s.iterations, s.l1_distance, s.l2_distance
        );
    }
    write_output(a.out.as_deref(), &body)
}

fn pde(a: Pde) -> Result<()> {
    let rho0 = match TestFunction::parse(&a.rho0, a.dim)? {
        TestFunction::Gaussian(g) => g,
        _ => return Err(Error::Parameter("--rho0 must be `gauss:A,s[,c...]`".into())),
    };
    let grid = match a.half_width {
        Some(w) => Grid::centered(&rho0.center, w, a.grid)?,
        None => Grid::for_gaussian(&rho0, a.sigma2, a.horizon, a.grid)?,
    };
    let field = match a.method {
        PdeMethod::Exact => {
            let problem = PdeProblem::new(a.sigma2, a.rnet, InitialDensity::Gaussian(rho0.clone()), a.horizon)?;
            let evolved = rho0.evolve(problem.sigma2, problem.growth, a.horizon);
            DensityField::sample(grid, a.horizon, |x| evolved.value(x))
        }
        PdeMethod::Fd => {
            let initial = DensityField::sample(grid, 0.0, |x| gaussian_solution(&rho0, a.sigma2, a.rnet, 0.0, x));
            let problem = PdeProblem::new(a.sigma2, a.rnet, InitialDensity::Grid(initial), a.horizon)?;
            let dt = problem.max_time_step(a.grid) * 0.5;
            fd_solve(&problem, a.grid, dt, Boundary::ZeroFlux)?
        }
    };
    let dim = field.grid.dim();
    let mut body = (1..=dim).map(|k| format!("x{k}")).collect::<Vec<_>>().join(",") + ",value\n";
    for (i, v) in field.values.iter().enumerate() {
        for x in field.grid.node(i) {
            let _ = write!(body, "{x},");
        }
        let _ = writeln!(body, "{v}");
    }
    write_output(a.out.as_deref(), &body)
}

fn hydro(a: Hydro) -> ExitCode {
    let mut cfg = match load_config(&a.config) {
        Ok(c) => c,
        Err(e @ (Error::Validation(_) | Error::Parse { .. })) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let dir = a.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    cfg.output.directory = dir.clone();
    let opts = HydroOptions {
        fixed_cloud: a.fixed_cloud,
        jobs: a.jobs,
    };
    let (report, failure) = match run_hydro_experiment(&cfg, &opts) {
        Ok(r) => (r, None),
        Err(f) => (*f.partial, Some(f.error)),
    };
    if let Err(e) = emit_report(&report, &dir) {
        eprintln!("error: {e}");
        return ExitCode::from(3);
    }
    match failure {
        None => {
            for row in &report.errors {
                eprintln!(
                    "N={:<4} {:<16} mean={:.6} ± {:.6}  ref={:.6}  rel_error={:.4}",
                    row.scale, row.observable_id, row.mean, row.stderr, row.pde_ref, row.rel_error
                );
            }
            ExitCode::SUCCESS
        }
        Some(e @ Error::Validation(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
