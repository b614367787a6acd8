//! Effective diffusivity of the random walk on the point cloud, and the
//! discrete operators used to compare the rescaled walk with its limit.

mod corrector;
mod generator;
mod msd;
mod resolvent;

pub use corrector::{axis, corrector_energy, solve_corrector, CorrectorSolution, DEFAULT_TOL};
pub use generator::{
    apply_generator, generator_l2_decay, inner, l1_norm, l2_norm, site_laplacians, site_values, site_weight,
};
pub use msd::{msd_diffusivity, MsdEstimate};
pub use resolvent::{resolvent_residual, solve_resolvent, ResolventSolution};
