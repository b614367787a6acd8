use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::RateGraph;
use crate::homogenize::corrector::Laplacian;
use crate::homogenize::generator::{apply_generator, l1_norm, l2_norm, site_laplacians, site_values};
use crate::linalg::conjugate_gradient;
use crate::scalar::Scalar;
use crate::testfn::TestFunction;

/// Discrete resolvent approximation `G_N^λ` of a test function.
#[derive(Debug, Clone, Serialize)]
pub struct ResolventSolution<T> {
    pub lambda: T,
    pub scale: T,
    /// `G_N^λ(x/N)` per site.
    pub values: Vec<T>,
    /// Relative residual of `λ G_N^λ - L^N G_N^λ = H_N`.
    pub residual: T,
    pub iterations: usize,
    /// `‖G_N^λ - G‖_{L¹(μ_N)}`.
    pub l1_distance: T,
    /// `‖G_N^λ - G‖_{L²(μ_N)}`.
    pub l2_distance: T,
}

/// Solves `(λ - L^N) G_N^λ = H_N` with `H = λG - σ²ΔG` sampled on `V/N`.
pub fn solve_resolvent<T: Scalar>(
    graph: &RateGraph<T>,
    scale: T,
    lambda: T,
    g: &TestFunction<T>,
    sigma2: T,
    tol: T,
) -> Result<ResolventSolution<T>> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::param(format!("lambda must be positive, got {lambda}")));
    }
    if !(sigma2 > T::zero()) {
        return Err(Error::param(format!("sigma2 must be positive, got {sigma2}")));
    }
    if !(scale > T::zero()) {
        return Err(Error::param(format!("scale must be positive, got {scale}")));
    }
    let cloud = graph.cloud();
    let dim = cloud.dim();
    let gv = site_values(cloud, scale, g);
    let lap = site_laplacians(cloud, scale, g);
    let h: Vec<T> = gv.iter().zip(&lap).map(|(&v, &l)| lambda * v - sigma2 * l).collect();
    let op = Laplacian {
        graph,
        rate_scale: scale * scale,
        shift: lambda,
    };
    let sol = conjugate_gradient(&op, &h, tol, 10 * graph.len().max(10), T::zero())?;
    let diff: Vec<T> = sol.x.iter().zip(&gv).map(|(&a, &b)| a - b).collect();
    Ok(ResolventSolution {
        lambda,
        scale,
        l1_distance: l1_norm(&diff, scale, dim),
        l2_distance: l2_norm(&diff, scale, dim),
        values: sol.x,
        residual: sol.relative_residual,
        iterations: sol.iterations,
    })
}

/// Site-wise relative residual `max |λf - L^N f - H| / max |H|` of a candidate solution.
pub fn resolvent_residual<T: Scalar>(
    graph: &RateGraph<T>,
    scale: T,
    lambda: T,
    g: &TestFunction<T>,
    sigma2: T,
    values: &[T],
) -> T {
    let cloud = graph.cloud();
    let gv = site_values(cloud, scale, g);
    let lap = site_laplacians(cloud, scale, g);
    let lf = apply_generator(graph, scale, values);
    let mut worst = T::zero();
    let mut hmax = T::zero();
    for i in 0..values.len() {
        let h = lambda * gv[i] - sigma2 * lap[i];
        worst = worst.max((lambda * values[i] - lf[i] - h).abs());
        hmax = hmax.max(h.abs());
    }
    if hmax > T::zero() {
        worst / hmax
    } else {
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_graph, sample_poisson_cloud, RateGraph, Topology};
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn edgeless_graph_gives_scaled_rhs() {
        let c = sample_poisson_cloud(0.05_f64, 40.0, 2, Topology::Free, 4).unwrap();
        let g = build_graph(c.clone(), 1e-3).unwrap();
        assert_eq!(g.edge_count(), 0);
        let tf = TestFunction::gaussian(1.0, 5.0, vec![0.0, 0.0]).unwrap();
        let s = solve_resolvent(&g, 2.0, 0.5, &tf, 1.5, 1e-12).unwrap();
        let gv = site_values(&c, 2.0, &tf);
        let lap = site_laplacians(&c, 2.0, &tf);
        for i in 0..g.len() {
            let expect = (0.5 * gv[i] - 1.5 * lap[i]) / 0.5;
            assert!((s.values[i] - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_non_positive_lambda() {
        let c = sample_poisson_cloud(1.0_f64, 10.0, 2, Topology::Free, 4).unwrap();
        let g = build_graph(c, 3.0).unwrap();
        let tf = TestFunction::gaussian(1.0, 1.0, vec![0.0, 0.0]).unwrap();
        assert!(matches!(solve_resolvent(&g, 2.0, 0.0, &tf, 1.0, 1e-8), Err(Error::Parameter(_))));
        assert!(solve_resolvent(&g, 2.0, -1.0, &tf, 1.0, 1e-8).is_err());
    }

    #[test]
    fn solution_satisfies_defining_equation() {
        let c = sample_poisson_cloud(1.0_f64, 30.0, 2, Topology::Free, 6).unwrap();
        let g = RateGraph::build(c, 6.0).unwrap();
        let tf = TestFunction::gaussian(1.0, 1.0, vec![0.0, 0.0]).unwrap();
        let s = solve_resolvent(&g, 5.0, 1.0, &tf, 6.0, 1e-10).unwrap();
        assert!(s.residual <= 1e-10);
        assert!(resolvent_residual(&g, 5.0, 1.0, &tf, 6.0, &s.values) < 1e-8);
    }

    #[test]
    fn matches_dense_solve() {
        let c = sample_poisson_cloud(1.0_f64, 6.0, 2, Topology::Free, 12).unwrap();
        assert!(c.len() <= 50);
        let g = RateGraph::build(c.clone(), 4.0).unwrap();
        let (n, scale, lambda, sigma2) = (g.len(), 1.5, 0.7, 2.0);
        let tf = TestFunction::gaussian(1.0, 1.0, vec![0.3, 0.0]).unwrap();
        let mut a = DMatrix::<f64>::identity(n, n) * lambda;
        for x in 0..n {
            for y in 0..n {
                let d = c.distance(x, y);
                if x != y && d <= 4.0 {
                    let r = scale * scale * (-d).exp();
                    a[(x, x)] += r;
                    a[(x, y)] -= r;
                }
            }
        }
        let gv = site_values(&c, scale, &tf);
        let lap = site_laplacians(&c, scale, &tf);
        let h = DVector::from_iterator(n, (0..n).map(|i| lambda * gv[i] - sigma2 * lap[i]));
        let dense = a.lu().solve(&h).unwrap();
        let s = solve_resolvent(&g, scale, lambda, &tf, sigma2, 1e-12).unwrap();
        for i in 0..n {
            assert!((s.values[i] - dense[i]).abs() <= 1e-8 * dense.amax());
        }
    }
}
