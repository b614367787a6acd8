//! Branching random walks on Poisson point clouds.
//!
//! The crate samples the random geometry ([`geometry`]), simulates the
//! particle system exactly ([`dynamics`]), estimates the effective
//! diffusivity of the underlying walk ([`homogenize`]), solves the limiting
//! reaction–diffusion equation ([`pde`]) and ties the pieces together in
//! reproducible experiments ([`harness`]).
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix `f64`, which is what the harness and CLI use.

pub mod alias;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod homogenize;
pub mod linalg;
pub mod pde;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod testfn;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Cloud = geometry::PointCloud<f64>;
pub type Graph = geometry::RateGraph<f64>;
pub type Corrector = homogenize::CorrectorSolution<f64>;
pub type Resolvent = homogenize::ResolventSolution<f64>;
pub type TestFn = testfn::TestFunction<f64>;
pub type Particles<'g> = dynamics::ParticleState<'g, f64>;
pub type Trajectory = dynamics::TrajectoryRecord<f64>;
pub type Problem = pde::PdeProblem<f64>;
pub type Field = pde::DensityField<f64>;
