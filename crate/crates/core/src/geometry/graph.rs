use std::sync::{Arc, OnceLock};

use crate::alias::AliasTable;
use crate::error::{Error, Result};
use crate::geometry::cloud::{PointCloud, Topology};
use crate::scalar::Scalar;

/// Default neighbor cutoff radius.
pub const DEFAULT_CUTOFF: f64 = 15.0;

/// Edge-thinning applied on top of the complete cutoff graph.
#[derive(Debug, Clone, PartialEq)]
pub enum Percolation<T> {
    None,
    /// Edge kept with probability `1 - exp(-beta * d^-alpha)`.
    LongRange { alpha: T, beta: T, seed: u64 },
    /// Edge kept with probability `1 - exp(-beta * W_x W_y * d^-alpha)`,
    /// with Pareto weights `P(W > w) = w^-(tau-1)`.
    ScaleFree {
        alpha: T,
        beta: T,
        tau: T,
        seed: u64,
        weights: Vec<T>,
    },
}

impl<T> Percolation<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Percolation::None => "none",
            Percolation::LongRange { .. } => "longrange",
            Percolation::ScaleFree { .. } => "scalefree",
        }
    }
}

/// Outgoing edge of a site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub target: usize,
    pub rate: T,
}

/// Symmetric jump-rate graph `r(x, y) = exp(-|x - y|)` on a point cloud, truncated at a cutoff.
///
/// Stored in compressed-row form with neighbor lists sorted by index.
/// Destination samplers are built on first use and shared afterwards.
#[derive(Debug)]
pub struct RateGraph<T> {
    cloud: Arc<PointCloud<T>>,
    cutoff: T,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    rates: Vec<T>,
    totals: Vec<T>,
    percolation: Percolation<T>,
    samplers: OnceLock<Vec<Option<AliasTable<T>>>>,
}

impl<T: Scalar> Clone for RateGraph<T> {
    fn clone(&self) -> Self {
        RateGraph {
            cloud: Arc::clone(&self.cloud),
            cutoff: self.cutoff,
            offsets: self.offsets.clone(),
            targets: self.targets.clone(),
            rates: self.rates.clone(),
            totals: self.totals.clone(),
            percolation: self.percolation.clone(),
            samplers: OnceLock::new(),
        }
    }
}

/// Connects every pair within `cutoff` with rate `exp(-dist)` and builds destination samplers.
pub fn build_graph<T: Scalar>(cloud: impl Into<Arc<PointCloud<T>>>, cutoff: T) -> Result<RateGraph<T>> {
    let g = RateGraph::build(cloud, cutoff)?;
    g.samplers();
    Ok(g)
}

impl<T: Scalar> RateGraph<T> {
    /// Like [`build_graph`] but leaves the samplers to be built lazily.
    pub fn build(cloud: impl Into<Arc<PointCloud<T>>>, cutoff: T) -> Result<Self> {
        let cloud = cloud.into();
        if !(cutoff > T::zero()) || !cutoff.is_finite() {
            return Err(Error::param(format!("cutoff must be positive, got {cutoff}")));
        }
        if cloud.topology() == Topology::Periodic && cutoff > cloud.side() * T::of(0.5) {
            return Err(Error::param(format!(
                "cutoff {cutoff} exceeds half the torus side {}",
                cloud.side()
            )));
        }
        let cells = CellList::new(&cloud, cutoff);
        let n = cloud.len();
        let cutoff2 = cutoff * cutoff;
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        let mut rates = Vec::new();
        let mut totals = Vec::with_capacity(n);
        let mut scratch: Vec<(u32, T)> = Vec::new();
        let mut neighbor_cells = Vec::new();
        for i in 0..n {
            scratch.clear();
            cells.neighbor_cells(cells.cell_of_point[i], &mut neighbor_cells);
            for &c in &neighbor_cells {
                for &j in cells.points_in(c) {
                    let j = j as usize;
                    if j == i {
                        continue;
                    }
                    let d2 = squared_distance(&cloud, i, j);
                    if d2 <= cutoff2 {
                        scratch.push((j as u32, (-d2.sqrt()).exp()));
                    }
                }
            }
            scratch.sort_unstable_by_key(|e| e.0);
            let mut total = 0.0f64;
            for &(j, r) in &scratch {
                targets.push(j);
                rates.push(r);
                total += r.as_f64();
            }
            totals.push(T::of(total));
            offsets.push(targets.len());
        }
        Ok(RateGraph {
            cloud,
            cutoff,
            offsets,
            targets,
            rates,
            totals,
            percolation: Percolation::None,
            samplers: OnceLock::new(),
        })
    }

    /// Assembles a graph from explicit directed edges `(src, dst, rate)`.
    ///
    /// Used by the text importer; duplicates and self-loops are rejected.
    pub fn from_edges(
        cloud: impl Into<Arc<PointCloud<T>>>,
        cutoff: T,
        mut edges: Vec<(usize, usize, T)>,
    ) -> Result<Self> {
        let cloud = cloud.into();
        let n = cloud.len();
        edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut offsets = vec![0usize; n + 1];
        for w in edges.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::param(format!("duplicate edge {} -> {}", w[0].0, w[0].1)));
            }
        }
        for &(s, d, r) in &edges {
            if s >= n || d >= n {
                return Err(Error::param(format!("edge {s} -> {d} references a missing point")));
            }
            if s == d {
                return Err(Error::param(format!("self-edge at {s}")));
            }
            if !(r >= T::zero()) {
                return Err(Error::param(format!("negative rate on edge {s} -> {d}")));
            }
            offsets[s + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = edges.iter().map(|e| e.1 as u32).collect();
        let rates: Vec<T> = edges.iter().map(|e| e.2).collect();
        let totals = (0..n)
            .map(|i| T::of(rates[offsets[i]..offsets[i + 1]].iter().map(|r| r.as_f64()).sum()))
            .collect();
        Ok(RateGraph {
            cloud,
            cutoff,
            offsets,
            targets,
            rates,
            totals,
            percolation: Percolation::None,
            samplers: OnceLock::new(),
        })
    }

    pub fn cloud(&self) -> &PointCloud<T> {
        &self.cloud
    }

    pub fn shared_cloud(&self) -> Arc<PointCloud<T>> {
        Arc::clone(&self.cloud)
    }

    pub fn cutoff(&self) -> T {
        self.cutoff
    }

    pub fn percolation(&self) -> &Percolation<T> {
        &self.percolation
    }

    pub fn len(&self) -> usize {
        self.totals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.totals.is_empty()
    }

    /// Number of directed edges (twice the unoriented count).
    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    /// Total jump rate `r(x) = Σ_y r(x, y)`.
    #[inline]
    pub fn total_rate(&self, x: usize) -> T {
        self.totals[x]
    }

    pub fn total_rates(&self) -> &[T] {
        &self.totals
    }

    pub fn degree(&self, x: usize) -> usize {
        self.offsets[x + 1] - self.offsets[x]
    }

    /// Neighbor indices and rates of `x`, sorted by neighbor index.
    #[inline]
    pub fn neighbors(&self, x: usize) -> (&[u32], &[T]) {
        let range = self.offsets[x]..self.offsets[x + 1];
        (&self.targets[range.clone()], &self.rates[range])
    }

    pub fn edges(&self, x: usize) -> impl Iterator<Item = Edge<T>> + '_ {
        let (t, r) = self.neighbors(x);
        t.iter().zip(r).map(|(&target, &rate)| Edge {
            target: target as usize,
            rate,
        })
    }

    /// Rate `r(x, y)`, zero when no edge is stored.
    pub fn rate(&self, x: usize, y: usize) -> T {
        let (t, r) = self.neighbors(x);
        match t.binary_search(&(y as u32)) {
            Ok(k) => r[k],
            Err(_) => T::zero(),
        }
    }

    /// Signed displacement of the edge `x -> y` under the cloud topology.
    pub fn displacement(&self, x: usize, y: usize) -> Vec<T> {
        self.cloud.displacement(x, y)
    }

    /// Per-site destination samplers (`None` for isolated sites).
    pub fn samplers(&self) -> &[Option<AliasTable<T>>] {
        self.samplers.get_or_init(|| {
            (0..self.len())
                .map(|x| AliasTable::new(self.neighbors(x).1))
                .collect()
        })
    }

    /// Sizes of connected components, largest first.
    pub fn component_sizes(&self) -> Vec<usize> {
        let n = self.len();
        let mut label = vec![usize::MAX; n];
        let mut sizes = Vec::new();
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = sizes.len();
            label[start] = id;
            stack.push(start);
            let mut size = 0;
            while let Some(x) = stack.pop() {
                size += 1;
                for &y in self.neighbors(x).0 {
                    let y = y as usize;
                    if label[y] == usize::MAX {
                        label[y] = id;
                        stack.push(y);
                    }
                }
            }
            sizes.push(size);
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    /// Keeps only the edges for which `keep(x, y, dist)` holds; called once per unoriented pair with `x < y`.
    pub(crate) fn thin(
        &self,
        percolation: Percolation<T>,
        mut keep: impl FnMut(usize, usize, T) -> bool,
    ) -> RateGraph<T> {
        let n = self.len();
        // Decide each unoriented edge once, from its lower endpoint.
        let mut kept = vec![false; self.targets.len()];
        for x in 0..n {
            for k in self.offsets[x]..self.offsets[x + 1] {
                let y = self.targets[k] as usize;
                if x < y {
                    kept[k] = keep(x, y, self.cloud.distance(x, y));
                }
            }
        }
        for x in 0..n {
            for k in self.offsets[x]..self.offsets[x + 1] {
                let y = self.targets[k] as usize;
                if x > y {
                    let (t, _) = self.neighbors(y);
                    let pos = t.binary_search(&(x as u32)).expect("graph is symmetric");
                    kept[k] = kept[self.offsets[y] + pos];
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        let mut rates = Vec::new();
        let mut totals = Vec::with_capacity(n);
        for x in 0..n {
            let mut total = 0.0f64;
            for k in self.offsets[x]..self.offsets[x + 1] {
                if kept[k] {
                    targets.push(self.targets[k]);
                    rates.push(self.rates[k]);
                    total += self.rates[k].as_f64();
                }
            }
            totals.push(T::of(total));
            offsets.push(targets.len());
        }
        RateGraph {
            cloud: Arc::clone(&self.cloud),
            cutoff: self.cutoff,
            offsets,
            targets,
            rates,
            totals,
            percolation,
            samplers: OnceLock::new(),
        }
    }
}

#[inline]
fn squared_distance<T: Scalar>(cloud: &PointCloud<T>, i: usize, j: usize) -> T {
    let (p, q) = (cloud.point(i), cloud.point(j));
    let periodic = cloud.topology() == Topology::Periodic;
    let side = cloud.side();
    let mut d2 = T::zero();
    for k in 0..p.len() {
        let mut v = q[k] - p[k];
        if periodic {
            v = crate::geometry::cloud::minimal_image(v, side);
        }
        d2 += v * v;
    }
    d2
}

/// Uniform cell grid with cell side >= cutoff.
struct CellList {
    dim: usize,
    per_dim: usize,
    periodic: bool,
    start: Vec<usize>,
    points: Vec<u32>,
    cell_of_point: Vec<usize>,
}

impl CellList {
    fn new<T: Scalar>(cloud: &PointCloud<T>, cutoff: T) -> Self {
        let dim = cloud.dim();
        let ratio = (cloud.side() / cutoff).floor().as_f64();
        // Cap the grid so sparse clouds in huge boxes stay cheap.
        let cap = ((cloud.len().max(1) as f64).powf(1.0 / dim as f64).ceil() * 2.0).max(1.0);
        let per_dim = ratio.clamp(1.0, cap) as usize;
        let side = cloud.side().as_f64();
        let n_cells = per_dim.pow(dim as u32);
        let cell_of_point: Vec<usize> = (0..cloud.len())
            .map(|i| {
                cloud.point(i).iter().rev().fold(0usize, |acc, &x| {
                    let c = ((x.as_f64() / side) * per_dim as f64) as usize;
                    acc * per_dim + c.min(per_dim - 1)
                })
            })
            .collect();
        let mut start = vec![0usize; n_cells + 1];
        for &c in &cell_of_point {
            start[c + 1] += 1;
        }
        for c in 0..n_cells {
            start[c + 1] += start[c];
        }
        let mut fill = start.clone();
        let mut points = vec![0u32; cloud.len()];
        for (i, &c) in cell_of_point.iter().enumerate() {
            points[fill[c]] = i as u32;
            fill[c] += 1;
        }
        CellList {
            dim,
            per_dim,
            periodic: cloud.topology() == Topology::Periodic,
            start,
            points,
            cell_of_point,
        }
    }

    fn points_in(&self, cell: usize) -> &[u32] {
        &self.points[self.start[cell]..self.start[cell + 1]]
    }

    /// Distinct cells within one step of `cell` in every coordinate.
    fn neighbor_cells(&self, cell: usize, out: &mut Vec<usize>) {
        out.clear();
        let m = self.per_dim as isize;
        let mut base = vec![0isize; self.dim];
        let mut rem = cell;
        for b in base.iter_mut() {
            *b = (rem % self.per_dim) as isize;
            rem /= self.per_dim;
        }
        let combos = 3usize.pow(self.dim as u32);
        'outer: for code in 0..combos {
            let mut c = code;
            let mut flat = 0usize;
            let mut stride = 1usize;
            for &b in base.iter() {
                let mut k = b + (c % 3) as isize - 1;
                c /= 3;
                if self.periodic {
                    k = k.rem_euclid(m);
                } else if k < 0 || k >= m {
                    continue 'outer;
                }
                flat += k as usize * stride;
                stride *= self.per_dim;
            }
            out.push(flat);
        }
        out.sort_unstable();
        out.dedup();
    }
}
