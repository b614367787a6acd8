use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{init_particles, run, DynamicsParams, InitialCondition, Observable, Observer};
use crate::error::{Error, Result};
use crate::geometry::{sample_poisson_cloud, PointCloud, RateGraph};
use crate::harness::config::{ExperimentConfig, Resample};
use crate::harness::sigma::{experiment_sigma2, SigmaEstimate};
use crate::pde::{InitialDensity, PdeProblem};
use crate::rng::{derive_seed, TAG_CLOUD, TAG_PERCOLATION, TAG_REPLICA};
use crate::stats::Summary;
use crate::testfn::{GaussianBump, TestFunction};

/// Grid spacing used when the PDE reference needs quadrature.
pub const REFERENCE_SPACING: f64 = 0.05;

/// Execution options that do not change results.
#[derive(Debug, Clone, Copy, Default)]
pub struct HydroOptions {
    /// Reuse one cloud, sampled at the largest scale and restricted for the others.
    pub fixed_cloud: bool,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

/// One row of the convergence table.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ErrorRow {
    #[serde(rename = "N")]
    pub scale: u32,
    pub observable_id: String,
    pub replicas: usize,
    pub mean: f64,
    pub stderr: f64,
    pub pde_ref: f64,
    pub rel_error: f64,
    /// Mean and standard error of the Dynkin residual at the horizon.
    pub dynkin_mean: f64,
    pub dynkin_stderr: f64,
    /// Points in the dynamics cloud, averaged over replicas.
    pub num_points: usize,
}

/// One observation of one replica.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TrajectoryRow {
    #[serde(rename = "N")]
    pub scale: u32,
    pub replica: usize,
    pub time: f64,
    pub observable_id: String,
    pub value: f64,
    pub total_alive: u64,
    pub jumps: u64,
    pub births: u64,
    pub deaths: u64,
    pub dynkin_residual: f64,
}

/// Reference values of the limiting equation.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PdeReference {
    pub sigma2: f64,
    pub growth: f64,
    pub horizon: f64,
    /// `γ`, the factor between the initial profile and the limiting density.
    pub intensity: f64,
    /// `γ ∫ G ρ(T)` per observable.
    pub values: Vec<(String, f64)>,
}

/// Everything an experiment produced, possibly cut short by a failure.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub root_seed: u64,
    pub fixed_cloud: bool,
    pub sigma: Option<SigmaEstimate>,
    pub pde: Option<PdeReference>,
    pub errors: Vec<ErrorRow>,
    #[serde(skip)]
    pub trajectories: Vec<TrajectoryRow>,
    pub complete: bool,
    pub failure: Option<String>,
}

/// A failed experiment with whatever was finished before the failing stage.
#[derive(Debug)]
pub struct HydroFailure {
    pub error: Error,
    pub partial: Box<ConvergenceReport>,
}

impl std::fmt::Display for HydroFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for HydroFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Runs the scales of an experiment and compares them with the limiting equation.
pub fn run_hydro_experiment(
    cfg: &ExperimentConfig,
    opts: &HydroOptions,
) -> std::result::Result<ConvergenceReport, HydroFailure> {
    let mut report = ConvergenceReport {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        root_seed: cfg.seeds.root,
        fixed_cloud: opts.fixed_cloud,
        sigma: None,
        pde: None,
        errors: Vec::new(),
        trajectories: Vec::new(),
        complete: false,
        failure: None,
    };
    let result = match opts.jobs {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build() {
            Ok(pool) => pool.install(|| execute(cfg, opts, &mut report)),
            Err(e) => Err(Error::Usage(format!("cannot start {k} worker threads: {e}"))),
        },
        None => execute(cfg, opts, &mut report),
    };
    match result {
        Ok(()) => {
            report.complete = true;
            Ok(report)
        }
        Err(error) => {
            report.failure = Some(error.to_string());
            Err(HydroFailure {
                error,
                partial: Box::new(report),
            })
        }
    }
}

fn execute(cfg: &ExperimentConfig, opts: &HydroOptions, report: &mut ConvergenceReport) -> Result<()> {
    cfg.validate()?;
    let ic = cfg.initial_condition()?;
    let observables = cfg.test_functions()?;
    let sigma = experiment_sigma2(cfg).map_err(|e| e.at_stage("sigma"))?;
    report.sigma = Some(sigma.clone());
    let pde = pde_reference(cfg, &ic, &observables, sigma.sigma2).map_err(|e| e.at_stage("pde"))?;
    report.pde = Some(pde.clone());

    let geo = &cfg.geometry;
    let dynamics = &cfg.dynamics;
    let percolation = geo.percolation.spec()?;
    let times = dynamics.observation_times();
    let ids: Vec<String> = cfg.observables.clone();
    if opts.fixed_cloud && geo.resample == Resample::Replica {
        return Err(Error::Usage("--fixed-cloud cannot be combined with resample = \"replica\"".into()));
    }

    let shared = match (opts.fixed_cloud, dynamics.scales.iter().max()) {
        (true, Some(&nmax)) => Some(
            sample_poisson_cloud(
                geo.gamma,
                geo.side * nmax as f64,
                geo.dim,
                geo.topology,
                derive_seed(cfg.seeds.root, &[TAG_CLOUD]),
            )
            .map_err(|e| e.at_stage("geometry"))?,
        ),
        _ => None,
    };

    for (k, &n) in dynamics.scales.iter().enumerate() {
        let count = dynamics.replicas_at(k);
        let scale = n as f64;
        let side = geo.side * scale;
        let build = |cloud_labels: &[u64], perc_labels: &[u64]| -> Result<RateGraph<f64>> {
            let cloud: PointCloud<f64> = match &shared {
                Some(c) => c.restrict_centered(side)?,
                None => sample_poisson_cloud(
                    geo.gamma,
                    side,
                    geo.dim,
                    geo.topology,
                    derive_seed(cfg.seeds.root, cloud_labels),
                )?,
            };
            let graph = RateGraph::build(cloud, geo.cutoff)?;
            percolation.apply(graph, derive_seed(cfg.seeds.root, perc_labels))
        };
        let per_scale = match (geo.resample, &shared) {
            (Resample::Replica, _) => None,
            (Resample::Scale, Some(_)) => Some(build(&[TAG_CLOUD], &[TAG_PERCOLATION]).map_err(|e| e.at_stage("geometry"))?),
            (Resample::Scale, None) => Some(
                build(&[TAG_CLOUD, n as u64], &[TAG_PERCOLATION, n as u64]).map_err(|e| e.at_stage("geometry"))?,
            ),
        };
        let params = DynamicsParams::new(scale, dynamics.birth, dynamics.death)?;
        let observers: Vec<Observer<f64>> = ids
            .iter()
            .zip(&observables)
            .map(|(id, f)| Observer::new(id.clone(), Observable::Test(f.clone()), times.clone()))
            .collect();

        let replicas: Vec<Result<(Vec<TrajectoryRow>, usize)>> = (0..count)
            .into_par_iter()
            .map(|r| {
                let own;
                let graph = match &per_scale {
                    Some(g) => g,
                    None => {
                        let labels = [TAG_CLOUD, n as u64, r as u64];
                        own = build(&labels, &[TAG_PERCOLATION, n as u64, r as u64]).map_err(|e| e.at_stage("geometry"))?;
                        &own
                    }
                };
                let seed = derive_seed(cfg.seeds.root, &[TAG_REPLICA, n as u64, r as u64]);
                let mut state = init_particles(graph, &ic, params, seed).map_err(|e| e.at_stage("dynamics"))?;
                let rec = run(&mut state, dynamics.horizon, &observers).map_err(|e| e.at_stage("dynamics"))?;
                let mut rows = Vec::new();
                for tr in &rec.traces {
                    let residual = tr.dynkin_residual();
                    for i in 0..tr.times.len() {
                        rows.push(TrajectoryRow {
                            scale: n,
                            replica: r,
                            time: tr.times[i],
                            observable_id: tr.id.clone(),
                            value: tr.values[i],
                            total_alive: tr.totals[i],
                            jumps: tr.counts[i].jumps,
                            births: tr.counts[i].births,
                            deaths: tr.counts[i].deaths,
                            dynkin_residual: residual[i],
                        });
                    }
                }
                Ok((rows, graph.len()))
            })
            .collect();
        let mut rows = Vec::new();
        let mut points = 0usize;
        for r in replicas {
            let (rs, len) = r?;
            rows.extend(rs);
            points += len;
        }
        let mean_points = points / count.max(1);

        for (id, reference) in &pde.values {
            let at_end: Vec<&TrajectoryRow> = rows
                .iter()
                .filter(|row| &row.observable_id == id && row.time == dynamics.horizon)
                .collect();
            let values: Vec<f64> = at_end.iter().map(|r| r.value).collect();
            let residuals: Vec<f64> = at_end.iter().map(|r| r.dynkin_residual).collect();
            let s = Summary::of(&values);
            let m = Summary::of(&residuals);
            report.errors.push(ErrorRow {
                scale: n,
                observable_id: id.clone(),
                replicas: values.len(),
                mean: s.mean,
                stderr: s.stderr,
                pde_ref: *reference,
                rel_error: relative_error(s.mean, *reference),
                dynkin_mean: m.mean,
                dynkin_stderr: m.stderr,
                num_points: mean_points,
            });
        }
        report.trajectories.extend(rows);
        log::info!("scale N={n}: {count} replicas, {mean_points} points on average");
    }
    Ok(())
}

/// `|mean - reference| / max(|reference|, 1e-12)`.
pub fn relative_error(mean: f64, reference: f64) -> f64 {
    (mean - reference).abs() / reference.abs().max(1e-12)
}

/// `γ ∫ G ρ(T)` for every observable, with limiting density `γ ρ₀`.
pub fn pde_reference(
    cfg: &ExperimentConfig,
    ic: &InitialCondition<f64>,
    observables: &[TestFunction<f64>],
    sigma2: f64,
) -> Result<PdeReference> {
    let d = &cfg.dynamics;
    let gamma = cfg.geometry.gamma;
    let growth = d.birth - d.death;
    let mut values = Vec::with_capacity(observables.len());
    for (id, g) in cfg.observables.iter().zip(observables) {
        let v = match ic {
            InitialCondition::Profile(rho0) => {
                let scaled = GaussianBump::new(gamma * rho0.amplitude, rho0.width, rho0.center.clone())?;
                let problem = PdeProblem::new(sigma2, growth, InitialDensity::Gaussian(scaled), d.horizon)?;
                problem.pairing(g, REFERENCE_SPACING)?
            }
            InitialCondition::Constant(_) | InitialCondition::Poisson(_) => {
                // A flat profile stays flat: ρ(T) = γ ρ₀ e^{(b-d)T}.
                let level = gamma * ic.mean_at(&vec![0.0; cfg.geometry.dim]) * (growth * d.horizon).exp();
                level * integral(g)?
            }
        };
        values.push((id.clone(), v));
    }
    Ok(PdeReference {
        sigma2,
        growth,
        horizon: d.horizon,
        intensity: gamma,
        values,
    })
}

fn integral(g: &TestFunction<f64>) -> Result<f64> {
    match g {
        TestFunction::Gaussian(b) => Ok(b.integral()),
        TestFunction::Bump { center, radius, .. } => {
            let grid = crate::pde::Grid::centered(center, *radius, REFERENCE_SPACING * radius.min(1.0))?;
            Ok(crate::pde::DensityField::sample(grid, 0.0, |x| g.value(x)).mass())
        }
        TestFunction::Constant { .. } => Err(Error::param(
            "a constant observable has no finite pairing with a flat initial profile",
        )),
    }
}
