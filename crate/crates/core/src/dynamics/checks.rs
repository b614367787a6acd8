use serde::Serialize;

use crate::dynamics::state::ParticleState;
use crate::error::{Error, Result};
use crate::homogenize::{apply_generator, l1_norm, l2_norm};
use crate::scalar::Scalar;
use crate::stats::{log_log_slope, Summary};

/// Tail window used to fit the decay exponent of the supremum distribution.
pub const KV_TAIL_WINDOW: (f64, f64) = (0.02, 0.2);

/// Empirical side of the moment bound on particles plus ghosts in a box.
#[derive(Debug, Clone, Serialize)]
pub struct GhostBound {
    /// Mean over replicas of `Σ_{x∈K} (η_T(x) + ghosts_T(x))`.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// `C_K M e^{bT}`, or `M Σ_{x∈K}(r(x)+1) (T ∨ 1)` without branching.
    pub rhs: f64,
    pub sites: usize,
    pub replicas: usize,
}

impl GhostBound {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// Compares the mean number of particles and ghosts inside the micro box `[lo, hi]`
/// with its deterministic bound.
///
/// `m` is the constant initial occupation and `horizon` the time the states were run to.
pub fn ghost_bound_check<T: Scalar>(
    states: &[ParticleState<'_, T>],
    lo: &[T],
    hi: &[T],
    m: u32,
    horizon: T,
) -> Result<GhostBound> {
    let first = states.first().ok_or_else(|| Error::param("no replicas to check"))?;
    let graph = first.graph();
    let sites = graph.cloud().indices_in_box(lo, hi);
    let mut per_replica = Vec::with_capacity(states.len());
    for s in states {
        let ghosts = s
            .ghosts()
            .ok_or_else(|| Error::Usage("ghost counting was not enabled for this run".into()))?;
        let eta = s.occupation();
        per_replica.push(sites.iter().map(|&x| eta[x] as f64 + ghosts[x] as f64).sum::<f64>());
    }
    let summary = Summary::of(&per_replica);
    let b = first.params().birth.as_f64();
    let t = horizon.as_f64();
    let rates = graph.total_rates();
    let rhs = if b > 0.0 {
        let ck: f64 = sites.iter().map(|&x| rates[x].as_f64() / b + 1.0).sum();
        ck * m as f64 * (b * t).exp()
    } else {
        let sum: f64 = sites.iter().map(|&x| rates[x].as_f64() + 1.0).sum();
        m as f64 * sum * t.max(1.0)
    };
    Ok(GhostBound {
        lhs: summary.mean,
        lhs_stderr: summary.stderr,
        rhs,
        sites: sites.len(),
        replicas: states.len(),
    })
}

/// `|||H||| = sqrt(‖H‖²_{L¹} + N^{-n} ‖H‖_{L²} ‖L^N H‖_{L²})` over `μ_N`.
pub fn triple_norm<T: Scalar>(graph: &crate::geometry::RateGraph<T>, scale: T, h: &[T]) -> f64 {
    let dim = graph.cloud().dim();
    let lh = apply_generator(graph, scale, h);
    let l1 = l1_norm(h, scale, dim).as_f64();
    let l2 = l2_norm(h, scale, dim).as_f64();
    let l2_gen = l2_norm(&lh, scale, dim).as_f64();
    let w = crate::homogenize::site_weight(scale, dim).as_f64();
    (l1 * l1 + w * l2 * l2_gen).sqrt()
}

/// Empirical tail of the supremum of `⟨π_t, H⟩` over replicas.
#[derive(Debug, Clone, Serialize)]
pub struct KvTail {
    pub thresholds: Vec<f64>,
    /// `P(sup > A)` at every threshold.
    pub tail: Vec<f64>,
    pub triple_norm: f64,
    /// Least-squares slope of `log P` against `log A` inside [`KV_TAIL_WINDOW`].
    pub slope: Option<f64>,
    /// Smallest `C` with `P(sup > A) ≤ C |||H||| / A` on the grid.
    pub constant: f64,
}

/// Builds the tail curve of `sups` on `thresholds` (default: the sorted distinct sample values).
pub fn kv_supremum_check(sups: &[f64], thresholds: Option<&[f64]>, triple_norm: f64) -> Result<KvTail> {
    if sups.is_empty() {
        return Err(Error::param("no suprema to analyse"));
    }
    let mut sorted = sups.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite suprema"));
    let grid: Vec<f64> = match thresholds {
        Some(t) => t.iter().copied().filter(|a| *a > 0.0).collect(),
        None => {
            let mut g: Vec<f64> = sorted.iter().copied().filter(|a| *a > 0.0).collect();
            g.dedup();
            g
        }
    };
    let n = sorted.len() as f64;
    let tail: Vec<f64> = grid
        .iter()
        .map(|&a| (sorted.len() - sorted.partition_point(|v| *v <= a)) as f64 / n)
        .collect();
    let (lo, hi) = KV_TAIL_WINDOW;
    let (xs, ys): (Vec<f64>, Vec<f64>) = grid
        .iter()
        .zip(&tail)
        .filter(|(_, &p)| p >= lo && p <= hi)
        .map(|(&a, &p)| (a, p))
        .unzip();
    let constant = if triple_norm > 0.0 {
        grid.iter().zip(&tail).map(|(&a, &p)| p * a / triple_norm).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(KvTail {
        slope: log_log_slope(&xs, &ys),
        thresholds: grid,
        tail,
        triple_norm,
        constant,
    })
}
