use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{sample_poisson_cloud, RateGraph};
use crate::harness::config::{ExperimentConfig, SigmaMethod};
use crate::homogenize::{axis, msd_diffusivity, solve_corrector};
use crate::rng::{derive_seed, TAG_PERCOLATION, TAG_SIGMA};
use crate::stats::Summary;
use crate::Graph;

/// A diffusivity value together with how it was obtained.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SigmaEstimate {
    pub sigma2: f64,
    pub stderr: Option<f64>,
    pub method: &'static str,
    /// Largest CG relative residual over the coordinate directions.
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
    /// Corrector energy at `ψ ≡ 0`, averaged over directions.
    pub zero_energy: Option<f64>,
    #[serde(rename = "L")]
    pub side: f64,
    pub num_points: usize,
    pub seed: Option<u64>,
}

/// Corrector diffusivity, averaged over the coordinate directions.
pub fn corrector_sigma2(graph: &Graph, tol: f64) -> Result<SigmaEstimate> {
    let dim = graph.cloud().dim();
    let mut per_axis = Vec::with_capacity(dim);
    let (mut residual, mut iterations, mut zero) = (0.0f64, 0usize, 0.0);
    for k in 0..dim {
        let s = solve_corrector(graph, &axis(dim, k), tol, None)?;
        per_axis.push(s.sigma2);
        residual = residual.max(s.residual);
        iterations = iterations.max(s.iterations);
        zero += s.zero_energy / dim as f64;
    }
    let sigma2 = per_axis.iter().sum::<f64>() / dim as f64;
    Ok(SigmaEstimate {
        sigma2,
        stderr: None,
        method: "corrector",
        residual: Some(residual),
        iterations: Some(iterations),
        zero_energy: Some(zero),
        side: graph.cloud().side(),
        num_points: graph.len(),
        seed: Some(graph.cloud().seed()),
    })
}

/// Mean-squared-displacement diffusivity.
pub fn msd_sigma2<T: crate::Scalar>(graph: &RateGraph<T>, t_max: f64, walkers: usize, seed: u64) -> Result<SigmaEstimate> {
    let m = msd_diffusivity(graph, t_max, walkers, seed)?;
    Ok(SigmaEstimate {
        sigma2: m.sigma2,
        stderr: Some(m.stderr),
        method: "msd",
        residual: None,
        iterations: None,
        zero_energy: None,
        side: graph.cloud().side().as_f64(),
        num_points: graph.len(),
        seed: Some(seed),
    })
}

/// Diffusivity for an experiment, from a cloud independent of every dynamics cloud.
pub fn experiment_sigma2(cfg: &ExperimentConfig) -> Result<SigmaEstimate> {
    let h = &cfg.homogenization;
    let g = &cfg.geometry;
    if h.method == SigmaMethod::Fixed {
        let sigma2 = h.sigma2.ok_or_else(|| Error::param("fixed diffusivity requires homogenization.sigma2"))?;
        return Ok(SigmaEstimate {
            sigma2,
            stderr: None,
            method: "fixed",
            residual: None,
            iterations: None,
            zero_energy: None,
            side: 0.0,
            num_points: 0,
            seed: None,
        });
    }
    let mut estimates = Vec::with_capacity(h.samples);
    for k in 0..h.samples {
        let labels: Vec<u64> = if k == 0 { vec![TAG_SIGMA] } else { vec![TAG_SIGMA, k as u64] };
        let seed = derive_seed(cfg.seeds.root, &labels);
        let cloud = sample_poisson_cloud(g.gamma, h.side, g.dim, h.topology, seed)?;
        let graph = RateGraph::build(cloud, g.cutoff)?;
        let graph = g.percolation.spec()?.apply(graph, derive_seed(seed, &[TAG_PERCOLATION]))?;
        estimates.push(match h.method {
            SigmaMethod::Corrector => corrector_sigma2(&graph, h.tol)?,
            _ => msd_sigma2(&graph, h.t_max, h.walkers, derive_seed(seed, &[TAG_SIGMA]))?,
        });
    }
    Ok(combine(estimates))
}

/// Averages estimates from independent clouds; the spread gives the standard error.
fn combine(mut estimates: Vec<SigmaEstimate>) -> SigmaEstimate {
    if estimates.len() == 1 {
        return estimates.pop().expect("one estimate");
    }
    let values: Vec<f64> = estimates.iter().map(|e| e.sigma2).collect();
    let summary = Summary::of(&values);
    let k = estimates.len() as f64;
    let first = &estimates[0];
    SigmaEstimate {
        sigma2: summary.mean,
        stderr: Some(summary.stderr),
        method: first.method,
        residual: estimates.iter().filter_map(|e| e.residual).reduce(f64::max),
        iterations: estimates.iter().filter_map(|e| e.iterations).max(),
        zero_energy: first.zero_energy.map(|_| estimates.iter().filter_map(|e| e.zero_energy).sum::<f64>() / k),
        side: first.side,
        num_points: estimates.iter().map(|e| e.num_points).sum(),
        seed: first.seed,
    }
}
