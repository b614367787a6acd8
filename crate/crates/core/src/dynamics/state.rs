use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::initial::InitialCondition;
use crate::error::{Error, Result};
use crate::geometry::RateGraph;
use crate::scalar::Scalar;

/// Events between exact recomputations of the aggregate rate.
pub const RESYNC_INTERVAL: u64 = 100_000;

/// Rate parameters of the particle system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsParams<T> {
    /// Diffusive scale `N`; jump rates are multiplied by `N²`.
    pub scale: T,
    pub birth: T,
    pub death: T,
}

impl<T: Scalar> DynamicsParams<T> {
    pub fn new(scale: T, birth: T, death: T) -> Result<Self> {
        if !(scale >= T::one()) || !scale.is_finite() {
            return Err(Error::param(format!("scale N must be >= 1, got {scale}")));
        }
        if !(birth >= T::zero()) || !(death >= T::zero()) || !birth.is_finite() || !death.is_finite() {
            return Err(Error::param(format!("birth and death rates must be >= 0, got b={birth}, d={death}")));
        }
        Ok(DynamicsParams { scale, birth, death })
    }
}

/// What a single Gillespie step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Jump { from: usize, to: usize },
    Birth { site: usize },
    Death { site: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord<T> {
    pub time: T,
    pub kind: EventKind,
}

/// Cumulative event counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounts {
    pub jumps: u64,
    pub births: u64,
    pub deaths: u64,
}

/// Fenwick tree over per-site event weights, for O(log n) proportional selection.
#[derive(Debug, Clone)]
pub(crate) struct SumTree<T> {
    tree: Vec<T>,
    total: T,
    top: usize,
}

impl<T: Scalar> SumTree<T> {
    pub fn new(values: &[T]) -> Self {
        let n = values.len();
        let mut tree = vec![T::zero(); n + 1];
        tree[1..].copy_from_slice(values);
        for i in 1..=n {
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                let v = tree[i];
                tree[parent] += v;
            }
        }
        let total = T::of(values.iter().map(|v| v.as_f64()).sum());
        let top = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        SumTree { tree, total, top }
    }

    #[inline]
    pub fn add(&mut self, i: usize, delta: T) {
        let n = self.tree.len() - 1;
        let mut k = i + 1;
        while k <= n {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
        self.total += delta;
    }

    #[inline]
    pub fn total(&self) -> T {
        self.total
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`, clamped to the last index.
    #[inline]
    pub fn find(&self, mut target: T) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = self.top;
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(n.saturating_sub(1))
    }
}

/// Occupation numbers of the branching random walk plus the aggregates that drive the Gillespie loop.
#[derive(Debug, Clone)]
pub struct ParticleState<'g, T> {
    graph: &'g RateGraph<T>,
    params: DynamicsParams<T>,
    eta: Vec<u32>,
    /// `N² r(x) + b + d`: the event rate of one particle at `x`.
    site_rate: Vec<T>,
    weights: SumTree<T>,
    alive: u64,
    time: T,
    counts: EventCounts,
    since_resync: u64,
    ghosts: Option<Vec<u64>>,
    rng: ChaCha8Rng,
}

/// Samples the initial configuration and sets up the event aggregates at time 0.
pub fn init_particles<'g, T: Scalar>(
    graph: &'g RateGraph<T>,
    ic: &InitialCondition<T>,
    params: DynamicsParams<T>,
    seed: u64,
) -> Result<ParticleState<'g, T>> {
    ic.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cloud = graph.cloud();
    let mut u = vec![T::zero(); cloud.dim()];
    let eta: Vec<u32> = (0..graph.len())
        .map(|i| {
            cloud.macroscopic_into(i, params.scale, &mut u);
            ic.sample_site(&u, &mut rng)
        })
        .collect();
    ParticleState::from_occupation(graph, eta, params, rng)
}

impl<'g, T: Scalar> ParticleState<'g, T> {
    /// State with explicit occupation numbers.
    pub fn with_occupation(graph: &'g RateGraph<T>, eta: Vec<u32>, params: DynamicsParams<T>, seed: u64) -> Result<Self> {
        Self::from_occupation(graph, eta, params, ChaCha8Rng::seed_from_u64(seed))
    }

    fn from_occupation(graph: &'g RateGraph<T>, eta: Vec<u32>, params: DynamicsParams<T>, rng: ChaCha8Rng) -> Result<Self> {
        if eta.len() != graph.len() {
            return Err(Error::param(format!("{} occupation numbers for {} sites", eta.len(), graph.len())));
        }
        // Jump destinations are drawn from the graph's alias tables.
        graph.samplers();
        let n2 = params.scale * params.scale;
        let site_rate: Vec<T> = graph
            .total_rates()
            .iter()
            .map(|&r| n2 * r + params.birth + params.death)
            .collect();
        let w: Vec<T> = eta.iter().zip(&site_rate).map(|(&k, &c)| T::of(k as f64) * c).collect();
        Ok(ParticleState {
            graph,
            params,
            alive: eta.iter().map(|&k| k as u64).sum(),
            eta,
            site_rate,
            weights: SumTree::new(&w),
            time: T::zero(),
            counts: EventCounts::default(),
            since_resync: 0,
            ghosts: None,
            rng,
        })
    }

    /// Turns on ghost counting: one ghost is left at `x` for every jump out of `x`.
    pub fn with_ghosts(mut self) -> Self {
        self.ghosts = Some(vec![0; self.eta.len()]);
        self
    }

    pub fn graph(&self) -> &'g RateGraph<T> {
        self.graph
    }

    pub fn params(&self) -> DynamicsParams<T> {
        self.params
    }

    pub fn occupation(&self) -> &[u32] {
        &self.eta
    }

    pub fn ghosts(&self) -> Option<&[u64]> {
        self.ghosts.as_deref()
    }

    pub fn alive(&self) -> u64 {
        self.alive
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn counts(&self) -> EventCounts {
        self.counts
    }

    /// Incrementally maintained `W = Σ_x η(x)(N² r(x) + b + d)`.
    pub fn total_rate(&self) -> T {
        self.weights.total()
    }

    /// `W` recomputed from scratch.
    pub fn exact_total_rate(&self) -> T {
        T::of(
            self.eta
                .iter()
                .zip(&self.site_rate)
                .map(|(&k, &c)| k as f64 * c.as_f64())
                .sum(),
        )
    }

    /// Rebuilds the weight tree from the occupation numbers.
    pub fn resync(&mut self) {
        let w: Vec<T> = self
            .eta
            .iter()
            .zip(&self.site_rate)
            .map(|(&k, &c)| T::of(k as f64) * c)
            .collect();
        self.weights = SumTree::new(&w);
        self.since_resync = 0;
    }

    /// Empirical measure paired with a function of sites: `N^{-n} Σ η(x) f(x)`.
    pub fn pair_with(&self, values: &[T]) -> T {
        let w = crate::homogenize::site_weight(self.params.scale, self.graph.cloud().dim());
        w * T::of(
            self.eta
                .iter()
                .zip(values)
                .filter(|(&k, _)| k > 0)
                .map(|(&k, v)| k as f64 * v.as_f64())
                .sum(),
        )
    }

    /// `⟨π^N, G⟩ = N^{-n} Σ η(x) G(x/N)`.
    pub fn observe(&self, g: &crate::testfn::TestFunction<T>) -> T {
        let cloud = self.graph.cloud();
        let mut u = vec![T::zero(); cloud.dim()];
        let w = crate::homogenize::site_weight(self.params.scale, cloud.dim());
        let mut acc = T::zero();
        for (i, &k) in self.eta.iter().enumerate() {
            if k > 0 {
                cloud.macroscopic_into(i, self.params.scale, &mut u);
                acc += T::of(k as f64) * g.value(&u);
            }
        }
        w * acc
    }

    /// Draws the exponential holding time, or `None` when no event can fire.
    #[inline]
    pub(crate) fn holding_time(&mut self) -> Option<T> {
        if self.alive == 0 {
            return None;
        }
        let total = self.weights.total();
        if !(total > T::zero()) {
            return None;
        }
        let u: f64 = self.rng.random();
        Some(T::of(-(1.0 - u).ln() / total.as_f64()))
    }

    /// Selects and applies one event at the current time.
    pub(crate) fn fire(&mut self) -> EventKind {
        let x = loop {
            let target = T::of(self.rng.random::<f64>()) * self.weights.total();
            let x = self.weights.find(target);
            if self.eta[x] > 0 {
                break x;
            }
            // Rounding drift pointed at an empty site.
            self.resync();
        };
        let c = self.site_rate[x];
        let jump_rate = c - self.params.birth - self.params.death;
        let v = T::of(self.rng.random::<f64>()) * c;
        let (b, d) = (self.params.birth, self.params.death);
        let kind = if self.graph.degree(x) > 0 && (v < jump_rate || (b == T::zero() && d == T::zero())) {
            let table = self.graph.samplers()[x].as_ref().expect("site with edges has a sampler");
            let y = self.graph.neighbors(x).0[table.sample(&mut self.rng)] as usize;
            self.eta[x] -= 1;
            self.eta[y] += 1;
            self.weights.add(x, -c);
            self.weights.add(y, self.site_rate[y]);
            if let Some(g) = self.ghosts.as_mut() {
                g[x] += 1;
            }
            self.counts.jumps += 1;
            EventKind::Jump { from: x, to: y }
        } else if d == T::zero() || (b > T::zero() && v < jump_rate + b) {
            self.eta[x] += 1;
            self.alive += 1;
            self.weights.add(x, c);
            self.counts.births += 1;
            EventKind::Birth { site: x }
        } else {
            self.eta[x] -= 1;
            self.alive -= 1;
            self.weights.add(x, -c);
            self.counts.deaths += 1;
            EventKind::Death { site: x }
        };
        self.since_resync += 1;
        if self.since_resync >= RESYNC_INTERVAL {
            self.resync();
        }
        kind
    }

    /// Advances by one Gillespie event.
    pub fn step(&mut self) -> Result<EventRecord<T>> {
        let dt = self.holding_time().ok_or(Error::Absorbed)?;
        self.time += dt;
        let kind = self.fire();
        Ok(EventRecord { time: self.time, kind })
    }

    pub(crate) fn set_time(&mut self, t: T) {
        self.time = t;
    }
}
