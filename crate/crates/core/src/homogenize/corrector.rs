use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{RateGraph, Topology};
use crate::linalg::{conjugate_gradient, LinearOperator};
use crate::scalar::Scalar;

/// Default CG tolerance for the corrector and resolvent systems.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Minimizer of the periodic corrector energy and the resulting diffusivity.
#[derive(Debug, Clone, Serialize)]
pub struct CorrectorSolution<T> {
    /// Corrector values, gauge-fixed to zero mean.
    pub psi: Vec<T>,
    pub direction: Vec<T>,
    /// Energy at `psi`; equals `σ²` for a unit direction.
    pub sigma2: T,
    /// Energy at `psi ≡ 0`, an upper bound for `sigma2`.
    pub zero_energy: T,
    pub residual: T,
    pub iterations: usize,
    pub side: T,
    pub num_points: usize,
}

/// Graph Laplacian `(Aψ)(x) = Σ_y r(x,y) (ψ(x) - ψ(y))`.
pub(crate) struct Laplacian<'a, T> {
    pub graph: &'a RateGraph<T>,
    /// Multiplies every rate (`N²` for the rescaled walk).
    pub rate_scale: T,
    /// Added to the diagonal (`λ` for the resolvent).
    pub shift: T,
}

impl<T: Scalar> LinearOperator<T> for Laplacian<'_, T> {
    fn dim(&self) -> usize {
        self.graph.len()
    }

    fn apply(&self, x: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (targets, rates) = self.graph.neighbors(i);
            let xi = x[i];
            let acc: T = targets
                .iter()
                .zip(rates)
                .map(|(&j, &r)| r * (xi - x[j as usize]))
                .sum();
            *o = self.shift * xi + self.rate_scale * acc;
        }
    }

    fn diagonal(&self) -> Vec<T> {
        self.graph
            .total_rates()
            .iter()
            .map(|&r| self.shift + self.rate_scale * r)
            .collect()
    }
}

/// Projection `a · (y - x)` of every stored edge, in CSR order.
fn edge_projections<T: Scalar>(graph: &RateGraph<T>, direction: &[T]) -> Vec<T> {
    let cloud = graph.cloud();
    let mut d = vec![T::zero(); cloud.dim()];
    let mut out = Vec::with_capacity(graph.edge_count());
    for x in 0..graph.len() {
        for &y in graph.neighbors(x).0 {
            cloud.displacement_into(x, y as usize, &mut d);
            out.push(d.iter().zip(direction).map(|(&u, &v)| u * v).sum());
        }
    }
    out
}

/// `E(ψ) = (1 / (2|V|)) Σ_x Σ_{y~x} r(x,y) (a·(y-x) + ψ(y) - ψ(x))²`.
///
/// Averaging over every point as the tagged one realizes the Palm expectation
/// on the torus, with the outer factor one half of the variational formula.
pub fn corrector_energy<T: Scalar>(graph: &RateGraph<T>, direction: &[T], psi: &[T]) -> T {
    energy_with(graph, &edge_projections(graph, direction), psi)
}

fn energy_with<T: Scalar>(graph: &RateGraph<T>, proj: &[T], psi: &[T]) -> T {
    if graph.is_empty() {
        return T::zero();
    }
    let mut acc = 0.0f64;
    let mut k = 0;
    for x in 0..graph.len() {
        let (targets, rates) = graph.neighbors(x);
        for (&y, &r) in targets.iter().zip(rates) {
            let v = (proj[k] + psi[y as usize] - psi[x]).as_f64();
            acc += r.as_f64() * v * v;
            k += 1;
        }
    }
    T::of(acc / (2.0 * graph.len() as f64))
}

/// Minimizes the corrector energy along `direction` on a periodic graph.
///
/// Solves the normal equations `Σ_y r(x,y)(ψ(x) - ψ(y)) = Σ_y r(x,y) a·(y-x)`
/// with Jacobi-preconditioned CG, then subtracts the mean of `ψ`.
pub fn solve_corrector<T: Scalar>(
    graph: &RateGraph<T>,
    direction: &[T],
    tol: T,
    max_iter: Option<usize>,
) -> Result<CorrectorSolution<T>> {
    let cloud = graph.cloud();
    if cloud.topology() != Topology::Periodic {
        return Err(Error::param("the corrector problem needs a periodic graph"));
    }
    if direction.len() != cloud.dim() || direction.iter().all(|v| *v == T::zero()) {
        return Err(Error::param(format!(
            "direction must be a nonzero vector of length {}",
            cloud.dim()
        )));
    }
    if graph.is_empty() {
        return Err(Error::param("the corrector problem needs at least one point"));
    }
    let components = graph.component_sizes().len();
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    let proj = edge_projections(graph, direction);
    let mut rhs = vec![T::zero(); graph.len()];
    let mut k = 0;
    for (x, b) in rhs.iter_mut().enumerate() {
        let rates = graph.neighbors(x).1;
        let mut acc = 0.0f64;
        for &r in rates {
            acc += (r * proj[k]).as_f64();
            k += 1;
        }
        *b = T::of(acc);
    }
    let op = Laplacian {
        graph,
        rate_scale: T::one(),
        shift: T::zero(),
    };
    // Cancellation noise on symmetric lattices sits near this floor.
    let scale: T = graph.total_rates().iter().map(|&r| r * r).sum::<T>().sqrt() * graph.cutoff();
    let floor = scale * T::EPS * T::of(64.0);
    let max_iter = max_iter.unwrap_or(10 * graph.len().max(1));
    let sol = conjugate_gradient(&op, &rhs, tol, max_iter, floor)?;
    let mut psi = sol.x;
    let mean = psi.iter().copied().sum::<T>() / T::from_count(psi.len());
    for v in psi.iter_mut() {
        *v -= mean;
    }
    let sigma2 = energy_with(graph, &proj, &psi);
    let zero_energy = energy_with(graph, &proj, &vec![T::zero(); graph.len()]);
    if sigma2 < zero_energy * T::of(1e-6) {
        log::warn!("effective diffusivity {sigma2} is nearly degenerate");
    }
    Ok(CorrectorSolution {
        psi,
        direction: direction.to_vec(),
        sigma2,
        zero_energy,
        residual: sol.relative_residual,
        iterations: sol.iterations,
        side: cloud.side(),
        num_points: graph.len(),
    })
}

/// Unit vector along coordinate `axis`.
pub fn axis<T: Scalar>(dim: usize, axis: usize) -> Vec<T> {
    let mut e = vec![T::zero(); dim];
    e[axis] = T::one();
    e
}
