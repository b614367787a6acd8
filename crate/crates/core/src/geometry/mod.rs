//! Poisson point clouds and the exponential-rate random graph built on them.

mod cloud;
mod graph;
pub mod io;
mod percolation;

pub use cloud::{palm_condition, sample_poisson_cloud, PointCloud, Topology};
pub use graph::{build_graph, Edge, Percolation, RateGraph, DEFAULT_CUTOFF};
pub use percolation::{
    edge_coin, pareto_weights, percolate_long_range, percolate_scale_free, percolate_with_weights,
    retention_probability,
};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Percolation request, before it is applied to a graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PercolationSpec<T> {
    None,
    LongRange { alpha: T, beta: T },
    ScaleFree { alpha: T, beta: T, tau: T },
}

impl<T: Scalar> PercolationSpec<T> {
    /// Applies the thinning with coins seeded by `seed`.
    pub fn apply(&self, graph: RateGraph<T>, seed: u64) -> Result<RateGraph<T>> {
        match *self {
            PercolationSpec::None => Ok(graph),
            PercolationSpec::LongRange { alpha, beta } => percolate_long_range(&graph, alpha, beta, seed),
            PercolationSpec::ScaleFree { alpha, beta, tau } => {
                percolate_scale_free(&graph, alpha, beta, tau, seed)
            }
        }
    }

    /// Parses `none`, `longrange` or `scalefree` with the given parameters.
    pub fn from_parts(kind: &str, alpha: Option<T>, beta: Option<T>, tau: Option<T>) -> Result<Self> {
        let need = |v: Option<T>, name: &str| {
            v.ok_or_else(|| Error::param(format!("percolation `{kind}` requires {name}")))
        };
        match kind {
            "none" => Ok(PercolationSpec::None),
            "longrange" => Ok(PercolationSpec::LongRange {
                alpha: need(alpha, "alpha")?,
                beta: need(beta, "beta")?,
            }),
            "scalefree" => Ok(PercolationSpec::ScaleFree {
                alpha: need(alpha, "alpha")?,
                beta: need(beta, "beta")?,
                tau: need(tau, "tau")?,
            }),
            other => Err(Error::param(format!("unknown percolation kind `{other}`"))),
        }
    }
}
