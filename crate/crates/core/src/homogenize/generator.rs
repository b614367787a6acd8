use crate::geometry::{PointCloud, RateGraph};
use crate::scalar::Scalar;
use crate::testfn::TestFunction;

/// `G(x/N)` at every site, with `x/N` measured from the box center.
pub fn site_values<T: Scalar>(cloud: &PointCloud<T>, scale: T, g: &TestFunction<T>) -> Vec<T> {
    let mut u = vec![T::zero(); cloud.dim()];
    (0..cloud.len())
        .map(|i| {
            cloud.macroscopic_into(i, scale, &mut u);
            g.value(&u)
        })
        .collect()
}

/// `ΔG(x/N)` at every site.
pub fn site_laplacians<T: Scalar>(cloud: &PointCloud<T>, scale: T, g: &TestFunction<T>) -> Vec<T> {
    let mut u = vec![T::zero(); cloud.dim()];
    (0..cloud.len())
        .map(|i| {
            cloud.macroscopic_into(i, scale, &mut u);
            g.laplacian(&u)
        })
        .collect()
}

/// Diffusively rescaled generator `L^N f(x) = Σ_y N² r(x,y) (f(y) - f(x))`.
pub fn apply_generator<T: Scalar>(graph: &RateGraph<T>, scale: T, f: &[T]) -> Vec<T> {
    assert_eq!(f.len(), graph.len(), "one value per site");
    let n2 = scale * scale;
    (0..graph.len())
        .map(|x| {
            let (targets, rates) = graph.neighbors(x);
            let fx = f[x];
            let acc: T = targets
                .iter()
                .zip(rates)
                .map(|(&y, &r)| r * (f[y as usize] - fx))
                .sum();
            n2 * acc
        })
        .collect()
}

/// `N^{-n}`.
pub fn site_weight<T: Scalar>(scale: T, dim: usize) -> T {
    scale.powi(-(dim as i32))
}

/// `‖f‖_{L¹(μ_N)} = N^{-n} Σ |f(x)|`.
pub fn l1_norm<T: Scalar>(f: &[T], scale: T, dim: usize) -> T {
    site_weight(scale, dim) * f.iter().map(|v| v.abs()).sum::<T>()
}

/// `‖f‖_{L²(μ_N)} = (N^{-n} Σ f(x)²)^{1/2}`.
pub fn l2_norm<T: Scalar>(f: &[T], scale: T, dim: usize) -> T {
    (site_weight(scale, dim) * f.iter().map(|&v| v * v).sum::<T>()).sqrt()
}

/// `(f, g)_{μ_N}`.
pub fn inner<T: Scalar>(f: &[T], g: &[T], scale: T, dim: usize) -> T {
    site_weight(scale, dim) * f.iter().zip(g).map(|(&a, &b)| a * b).sum::<T>()
}

/// `N^{-n} ‖L^N G‖_{L²(μ_N)}` for each scale in `scales`, on one fixed graph.
pub fn generator_l2_decay<T: Scalar>(graph: &RateGraph<T>, scales: &[T], g: &TestFunction<T>) -> Vec<T> {
    let dim = graph.cloud().dim();
    scales
        .iter()
        .map(|&n| {
            let values = site_values(graph.cloud(), n, g);
            let lg = apply_generator(graph, n, &values);
            site_weight(n, dim) * l2_norm(&lg, n, dim)
        })
        .collect()
}
