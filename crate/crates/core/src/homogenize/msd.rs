use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::RateGraph;
use crate::rng;
use crate::scalar::Scalar;
use crate::stats::Summary;

/// Diffusivity estimated from the mean squared displacement of independent walkers.
#[derive(Debug, Clone, Serialize)]
pub struct MsdEstimate {
    pub t_max: f64,
    pub walkers: usize,
    /// Mean of `D_k(t_max)²` over walkers, per coordinate `k`.
    pub second_moments: Vec<f64>,
    /// Coordinate-averaged `E[D_k²] / (2 t_max)`.
    pub sigma2: f64,
    /// Standard error over walkers.
    pub stderr: f64,
    /// Walkers started on isolated sites (zero displacement).
    pub trapped: usize,
}

/// Runs `walkers` continuous-time random walks with rates `r(x,y)` up to `t_max`.
///
/// Displacements are accumulated jump by jump, which unwinds torus wrapping.
/// Walker `w` uses the stream `(seed, walker-tag, w)` and a uniformly chosen start.
pub fn msd_diffusivity<T: Scalar>(graph: &RateGraph<T>, t_max: f64, walkers: usize, seed: u64) -> Result<MsdEstimate> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::param(format!("t_max must be positive, got {t_max}")));
    }
    if walkers == 0 {
        return Err(Error::param("at least one walker is required"));
    }
    if graph.is_empty() {
        return Err(Error::param("cannot start walkers on an empty graph"));
    }
    let dim = graph.cloud().dim();
    let samplers = graph.samplers();
    let runs: Vec<(Vec<f64>, bool)> = (0..walkers)
        .into_par_iter()
        .map(|w| {
            let mut rng = rng::stream(seed, &[rng::TAG_WALKER, w as u64]);
            let mut x = rng.random_range(0..graph.len());
            let mut disp = vec![0.0f64; dim];
            let mut step = vec![T::zero(); dim];
            let trapped = samplers[x].is_none();
            let mut t = 0.0;
            while let Some(table) = &samplers[x] {
                let rate = graph.total_rate(x).as_f64();
                t += -(1.0 - rng.random::<f64>()).ln() / rate;
                if t > t_max {
                    break;
                }
                let y = graph.neighbors(x).0[table.sample(&mut rng)] as usize;
                graph.cloud().displacement_into(x, y, &mut step);
                for (d, s) in disp.iter_mut().zip(&step) {
                    *d += s.as_f64();
                }
                x = y;
            }
            (disp, trapped)
        })
        .collect();
    let mut second_moments = vec![0.0; dim];
    let per_walker: Vec<f64> = runs
        .iter()
        .map(|(d, _)| {
            for (m, v) in second_moments.iter_mut().zip(d) {
                *m += v * v / walkers as f64;
            }
            d.iter().map(|v| v * v).sum::<f64>() / (dim as f64 * 2.0 * t_max)
        })
        .collect();
    let s = Summary::of(&per_walker);
    Ok(MsdEstimate {
        t_max,
        walkers,
        second_moments,
        sigma2: s.mean,
        stderr: s.stderr,
        trapped: runs.iter().filter(|r| r.1).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_graph, PointCloud, Topology};

    #[test]
    fn isolated_point_does_not_move() {
        let c = PointCloud::from_coords(2, 10.0_f64, 1.0, Topology::Free, vec![5.0, 5.0]).unwrap();
        let g = build_graph(c, 3.0).unwrap();
        let m = msd_diffusivity(&g, 10.0, 20, 1).unwrap();
        assert_eq!(m.sigma2, 0.0);
        assert_eq!(m.trapped, 20);
    }

    #[test]
    fn rejects_bad_arguments() {
        let c = PointCloud::from_coords(2, 10.0_f64, 1.0, Topology::Free, vec![5.0, 5.0]).unwrap();
        let g = build_graph(c, 3.0).unwrap();
        assert!(msd_diffusivity(&g, 0.0, 10, 1).is_err());
        assert!(msd_diffusivity(&g, 1.0, 0, 1).is_err());
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let c = PointCloud::<f64>::unit_grid(2, 12).unwrap();
        let g = build_graph(c, 4.0).unwrap();
        let a = msd_diffusivity(&g, 20.0, 50, 3).unwrap();
        let b = msd_diffusivity(&g, 20.0, 50, 3).unwrap();
        assert_eq!(a.sigma2, b.sigma2);
    }
}
