//! Random edge thinning of a rate graph.
//!
//! Each unoriented edge `{x, y}` gets a single uniform coin derived by hashing
//! `(seed, min(x, y), max(x, y))`, so both orientations share the decision and
//! the outcome for a given edge does not depend on traversal order.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::graph::{Percolation, RateGraph};
use crate::rng;
use crate::scalar::Scalar;

/// Uniform coin in `[0, 1)` attached to the unoriented edge `{x, y}`.
pub fn edge_coin(seed: u64, x: usize, y: usize) -> f64 {
    let (a, b) = if x < y { (x, y) } else { (y, x) };
    rng::unit_interval(rng::derive_seed(seed, &[rng::TAG_PERCOLATION, a as u64, b as u64]))
}

/// Retention probability `1 - exp(-beta * weight * d^-alpha)`.
pub fn retention_probability<T: Scalar>(distance: T, alpha: T, beta: T, weight: T) -> T {
    -(-(beta * weight * distance.powf(-alpha))).exp_m1()
}

/// Long-range percolation: keeps each edge with probability `1 - exp(-beta d^-alpha)`.
pub fn percolate_long_range<T: Scalar>(graph: &RateGraph<T>, alpha: T, beta: T, seed: u64) -> Result<RateGraph<T>> {
    check_positive("alpha", alpha)?;
    check_positive("beta", beta)?;
    Ok(graph.thin(Percolation::LongRange { alpha, beta, seed }, |x, y, d| {
        edge_coin(seed, x, y) < retention_probability(d, alpha, beta, T::one()).as_f64()
    }))
}

/// Draws i.i.d. Pareto weights with `P(W > w) = w^-(tau-1)` for `w >= 1`.
pub fn pareto_weights<T: Scalar>(count: usize, tau: T, seed: u64) -> Result<Vec<T>> {
    if !(tau > T::one()) || !tau.is_finite() {
        return Err(Error::param(format!(
            "tail exponent tau must exceed 1 for a normalizable weight law, got {tau}"
        )));
    }
    let mut rng = rng::stream(seed, &[rng::TAG_PERCOLATION, 0x7765_6967_6874]);
    let inv = -1.0 / (tau.as_f64() - 1.0);
    Ok((0..count)
        .map(|_| {
            // 1 - u lies in (0, 1], so the weight is finite and >= 1.
            let u = 1.0 - rng.random::<f64>();
            T::of(u.powf(inv))
        })
        .collect())
}

/// Scale-free percolation: Pareto vertex weights modulate the long-range retention law.
pub fn percolate_scale_free<T: Scalar>(
    graph: &RateGraph<T>,
    alpha: T,
    beta: T,
    tau: T,
    seed: u64,
) -> Result<RateGraph<T>> {
    check_positive("alpha", alpha)?;
    check_positive("beta", beta)?;
    let weights = pareto_weights(graph.len(), tau, seed)?;
    percolate_with_weights(graph, alpha, beta, tau, seed, weights)
}

/// Scale-free thinning with caller-supplied weights (each must be >= 1).
pub fn percolate_with_weights<T: Scalar>(
    graph: &RateGraph<T>,
    alpha: T,
    beta: T,
    tau: T,
    seed: u64,
    weights: Vec<T>,
) -> Result<RateGraph<T>> {
    if weights.len() != graph.len() {
        return Err(Error::param(format!(
            "{} weights supplied for {} sites",
            weights.len(),
            graph.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= T::one())) {
        return Err(Error::param("scale-free weights must be >= 1"));
    }
    let w = weights.clone();
    Ok(graph.thin(
        Percolation::ScaleFree {
            alpha,
            beta,
            tau,
            seed,
            weights,
        },
        |x, y, d| edge_coin(seed, x, y) < retention_probability(d, alpha, beta, w[x] * w[y]).as_f64(),
    ))
}

fn check_positive<T: Scalar>(name: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be positive, got {v}")))
    }
}
