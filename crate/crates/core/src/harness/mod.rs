//! Declarative hydrodynamic experiments.
//!
//! A TOML file describes the geometry, the dynamics, how the diffusivity is
//! obtained and which test functions to track:
//!
//! ```toml
//! observables = ["gauss:1,1"]
//!
//! [geometry]
//! gamma = 1.0
//! side = 20.0          # macroscopic window; the cloud at scale N has side 20·N
//! cutoff = 8.0         # default 15
//! topology = "free"    # default
//! resample = "scale"   # or "replica" for a fresh cloud per replica
//!
//! [dynamics]
//! birth = 0.7
//! death = 0.2
//! horizon = 0.5
//! initial = "profile:gauss:2,1"
//! scales = [5, 10, 20]
//! replicas = 50        # or one count per scale, e.g. [800, 200, 50]
//!
//! [homogenization]     # optional
//! method = "corrector" # or "msd", or "fixed" with sigma2 = ...
//! side = 60.0
//! samples = 1          # independent clouds averaged
//!
//! [seeds]
//! root = 7
//!
//! [output]
//! directory = "hydro-out"
//! ```
//!
//! Unknown keys are rejected. Every observable's support, plus a margin of
//! [`MARGIN`] macroscopic units, must fit in the window.

mod config;
mod experiment;
mod report;
mod sigma;

pub use config::{
    load_config, parse_config, DynamicsConfig, ExperimentConfig, GeometryConfig, HomogenizationConfig, OutputConfig,
    PercolationConfig, Replicas, Resample, SeedConfig, SigmaMethod, MARGIN,
};
pub use experiment::{
    pde_reference, relative_error, run_hydro_experiment, ConvergenceReport, ErrorRow, HydroFailure, HydroOptions,
    PdeReference, TrajectoryRow, REFERENCE_SPACING,
};
pub use report::{emit_report, errors_csv, quote, trajectories_csv};
pub use sigma::{corrector_sigma2, experiment_sigma2, msd_sigma2, SigmaEstimate};
