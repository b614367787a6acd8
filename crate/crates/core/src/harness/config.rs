use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::InitialCondition;
use crate::error::{Error, Result};
use crate::geometry::{PercolationSpec, Topology, DEFAULT_CUTOFF};
use crate::homogenize::DEFAULT_TOL;
use crate::testfn::TestFunction;

/// Distance in macroscopic units between an observable's support and the window boundary.
pub const MARGIN: f64 = 5.0;

/// A full hydrodynamic experiment, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub homogenization: HomogenizationConfig,
    /// Test functions in the `gauss:`/`bump:`/`const:` syntax.
    pub observables: Vec<String>,
    #[serde(default)]
    pub seeds: SeedConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Intensity `γ` of the point cloud.
    pub gamma: f64,
    /// Side `L` of the macroscopic window; the cloud at scale `N` has side `L·N`.
    pub side: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default = "default_dynamics_topology")]
    pub topology: Topology,
    #[serde(default)]
    pub percolation: PercolationConfig,
    /// Whether each scale shares one cloud or every replica draws its own.
    #[serde(default)]
    pub resample: Resample,
}

/// How often the dynamics cloud is redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resample {
    /// One quenched cloud per scale.
    #[default]
    Scale,
    /// A fresh cloud for every replica, averaging over the environment.
    Replica,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercolationConfig {
    #[serde(default = "default_percolation_kind")]
    pub kind: String,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub tau: Option<f64>,
}

impl Default for PercolationConfig {
    fn default() -> Self {
        PercolationConfig {
            kind: default_percolation_kind(),
            alpha: None,
            beta: None,
            tau: None,
        }
    }
}

impl PercolationConfig {
    pub fn spec(&self) -> Result<PercolationSpec<f64>> {
        PercolationSpec::from_parts(&self.kind, self.alpha, self.beta, self.tau)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub birth: f64,
    pub death: f64,
    /// Final time `T`.
    pub horizon: f64,
    /// `const:M`, `poisson:RHO` or `profile:gauss:A,s[,c...]`.
    pub initial: String,
    pub scales: Vec<u32>,
    /// One count for every scale, or one count per entry of `scales`.
    pub replicas: Replicas,
    /// Observation grid; the horizon is always appended.
    #[serde(default)]
    pub times: Vec<f64>,
}

/// Replica counts, either shared by all scales or listed per scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Replicas {
    Uniform(usize),
    PerScale(Vec<usize>),
}

impl DynamicsConfig {
    /// Replicas at the `k`-th scale.
    pub fn replicas_at(&self, k: usize) -> usize {
        match &self.replicas {
            Replicas::Uniform(r) => *r,
            Replicas::PerScale(v) => v.get(k).copied().unwrap_or(0),
        }
    }

    /// The observation grid with the horizon as last point.
    pub fn observation_times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.times.iter().copied().filter(|&s| s < self.horizon).collect();
        t.push(self.horizon);
        t
    }
}

/// How the diffusivity fed to the limiting equation is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaMethod {
    Corrector,
    Msd,
    /// Use `homogenization.sigma2` as given.
    Fixed,
}

impl SigmaMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SigmaMethod::Corrector => "corrector",
            SigmaMethod::Msd => "msd",
            SigmaMethod::Fixed => "fixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogenizationConfig {
    #[serde(default = "default_method")]
    pub method: SigmaMethod,
    pub sigma2: Option<f64>,
    /// Side of the independent cloud used for the estimate.
    #[serde(default = "default_homog_side")]
    pub side: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_homog_topology")]
    pub topology: Topology,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_walkers")]
    pub walkers: usize,
    /// Independent clouds averaged for the estimate.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for HomogenizationConfig {
    fn default() -> Self {
        HomogenizationConfig {
            method: default_method(),
            sigma2: None,
            side: default_homog_side(),
            tol: default_tol(),
            topology: default_homog_topology(),
            t_max: default_t_max(),
            walkers: default_walkers(),
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    #[serde(default)]
    pub root: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Any of `json` and `csv`; the MANIFEST is always written.
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

fn default_dim() -> usize {
    2
}
fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF
}
fn default_dynamics_topology() -> Topology {
    Topology::Free
}
fn default_homog_topology() -> Topology {
    Topology::Periodic
}
fn default_percolation_kind() -> String {
    "none".into()
}
fn default_method() -> SigmaMethod {
    SigmaMethod::Corrector
}
fn default_homog_side() -> f64 {
    60.0
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_t_max() -> f64 {
    50.0
}
fn default_walkers() -> usize {
    1000
}
fn default_samples() -> usize {
    1
}
fn default_directory() -> PathBuf {
    PathBuf::from("hydro-out")
}
fn default_formats() -> Vec<String> {
    vec!["json".into(), "csv".into()]
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0);
        Error::Parse {
            line,
            message: e.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    /// Checks every constraint and reports all violations together.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let g = &self.geometry;
        let d = &self.dynamics;
        let h = &self.homogenization;
        if !(g.gamma > 0.0 && g.gamma.is_finite()) {
            bad.push(format!("geometry.gamma must be positive, got {}", g.gamma));
        }
        if !(g.side > 0.0 && g.side.is_finite()) {
            bad.push(format!("geometry.side must be positive, got {}", g.side));
        }
        if g.dim == 0 {
            bad.push("geometry.dim must be at least 1".into());
        }
        if !(g.cutoff > 0.0 && g.cutoff.is_finite()) {
            bad.push(format!("geometry.cutoff must be positive, got {}", g.cutoff));
        }
        if let Err(e) = g.percolation.spec() {
            bad.push(format!("geometry.percolation: {e}"));
        }
        for (name, v) in [("birth", d.birth), ("death", d.death)] {
            if !(v >= 0.0 && v.is_finite()) {
                bad.push(format!("dynamics.{name} must be >= 0, got {v}"));
            }
        }
        if !(d.horizon > 0.0 && d.horizon.is_finite()) {
            bad.push(format!("dynamics.horizon must be positive, got {}", d.horizon));
        }
        match &d.replicas {
            Replicas::Uniform(0) => bad.push("dynamics.replicas must be at least 1".into()),
            Replicas::PerScale(v) if v.len() != d.scales.len() => bad.push(format!(
                "dynamics.replicas lists {} counts for {} scales",
                v.len(),
                d.scales.len()
            )),
            Replicas::PerScale(v) if v.contains(&0) => bad.push("dynamics.replicas must be at least 1".into()),
            _ => {}
        }
        if d.times.windows(2).any(|w| !(w[0] < w[1])) || d.times.iter().any(|&t| !(t >= 0.0) || t > d.horizon) {
            bad.push("dynamics.times must be strictly increasing and lie in [0, horizon]".into());
        }
        match InitialCondition::<f64>::parse(&d.initial, g.dim.max(1)) {
            Ok(InitialCondition::Profile(p)) if p.dim() != g.dim => {
                bad.push(format!("dynamics.initial has dimension {}, geometry has {}", p.dim(), g.dim))
            }
            Ok(_) => {}
            Err(e) => bad.push(format!("dynamics.initial: {e}")),
        }
        let half = g.side / 2.0;
        for (k, spec) in self.observables.iter().enumerate() {
            let f = match TestFunction::<f64>::parse(spec, g.dim.max(1)) {
                Ok(f) => f,
                Err(e) => {
                    bad.push(format!("observables[{k}] `{spec}`: {e}"));
                    continue;
                }
            };
            if f.dim() != g.dim {
                bad.push(format!("observables[{k}] `{spec}` has dimension {}, geometry has {}", f.dim(), g.dim));
                continue;
            }
            if let Some((center, radius)) = f.support() {
                let reach = center.iter().fold(0.0f64, |m, c| m.max(c.abs())) + radius;
                if reach + MARGIN > half {
                    for n in &d.scales {
                        bad.push(format!(
                            "scale N={n}: observable `{spec}` reaches {reach} from the window center and needs \
                             a margin of {MARGIN}, but the window half-width is {half} (box side {} at this scale)",
                            g.side * *n as f64
                        ));
                    }
                }
            }
        }
        for &n in &d.scales {
            if n == 0 {
                bad.push("dynamics.scales entries must be >= 1".into());
            } else if g.topology == Topology::Periodic && g.cutoff > g.side * n as f64 / 2.0 {
                bad.push(format!(
                    "scale N={n}: cutoff {} exceeds half the periodic box side {}",
                    g.cutoff,
                    g.side * n as f64
                ));
            }
        }
        match h.method {
            SigmaMethod::Fixed => match h.sigma2 {
                Some(s) if s > 0.0 && s.is_finite() => {}
                _ => bad.push("homogenization.sigma2 must be a positive number when method = \"fixed\"".into()),
            },
            SigmaMethod::Corrector | SigmaMethod::Msd => {
                if h.sigma2.is_some() {
                    bad.push("homogenization.sigma2 is only used with method = \"fixed\"".into());
                }
                if !(h.side > 0.0) {
                    bad.push(format!("homogenization.side must be positive, got {}", h.side));
                }
                if h.topology == Topology::Periodic && g.cutoff > h.side / 2.0 {
                    bad.push(format!(
                        "homogenization.side {} must be at least twice the cutoff {}",
                        h.side, g.cutoff
                    ));
                }
            }
        }
        if h.method == SigmaMethod::Corrector && h.topology != Topology::Periodic {
            bad.push("homogenization.topology must be periodic for the corrector method".into());
        }
        if h.samples == 0 {
            bad.push("homogenization.samples must be at least 1".into());
        }
        if !(h.tol > 0.0) {
            bad.push(format!("homogenization.tol must be positive, got {}", h.tol));
        }
        if h.method == SigmaMethod::Msd && (!(h.t_max > 0.0) || h.walkers == 0) {
            bad.push("homogenization.t_max and homogenization.walkers must be positive".into());
        }
        for f in &self.output.formats {
            if f != "json" && f != "csv" {
                bad.push(format!("output.formats: unknown format `{f}`"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }

    pub fn initial_condition(&self) -> Result<InitialCondition<f64>> {
        InitialCondition::parse(&self.dynamics.initial, self.geometry.dim)
    }

    pub fn test_functions(&self) -> Result<Vec<TestFunction<f64>>> {
        self.observables
            .iter()
            .map(|s| TestFunction::parse(s, self.geometry.dim))
            .collect()
    }

    /// SHA-256 of the canonical JSON form, so it changes exactly when a field changes.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configuration serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
