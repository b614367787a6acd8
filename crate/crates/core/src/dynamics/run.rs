use serde::Serialize;

use crate::dynamics::state::{EventCounts, EventKind, ParticleState, RESYNC_INTERVAL};
use crate::error::{Error, Result};
use crate::homogenize::{apply_generator, site_values, site_weight};
use crate::scalar::Scalar;
use crate::testfn::TestFunction;

/// A function on sites paired with the empirical measure along a trajectory.
#[derive(Debug, Clone)]
pub enum Observable<T> {
    /// A macroscopic test function `G`, evaluated at `x/N`.
    Test(TestFunction<T>),
    /// Explicit per-site values, e.g. a discrete resolvent `G_N^λ`.
    Sites(Vec<T>),
}

/// An observable together with the times at which it is recorded.
#[derive(Debug, Clone)]
pub struct Observer<T> {
    pub id: String,
    pub observable: Observable<T>,
    /// Strictly increasing observation times within `[t₀, T]`.
    pub times: Vec<T>,
}

impl<T: Scalar> Observer<T> {
    pub fn new(id: impl Into<String>, observable: Observable<T>, times: Vec<T>) -> Self {
        Observer {
            id: id.into(),
            observable,
            times,
        }
    }
}

/// Recorded path of one observer.
#[derive(Debug, Clone, Serialize)]
pub struct ObserverTrace<T> {
    pub id: String,
    pub times: Vec<T>,
    /// `⟨π_t, G⟩` just after the last event at or before each time.
    pub values: Vec<T>,
    /// `∫₀ᵗ ⟨π_s, (L^N + b - d) G⟩ ds`.
    pub compensator: Vec<T>,
    pub totals: Vec<u64>,
    pub counts: Vec<EventCounts>,
    pub initial_value: T,
    /// `sup_{s ≤ T} ⟨π_s, G⟩`.
    pub supremum: T,
}

impl<T: Scalar> ObserverTrace<T> {
    /// Dynkin martingale `⟨π_t,G⟩ - ⟨π_0,G⟩ - ∫₀ᵗ ⟨π_s,(L^N+b-d)G⟩ ds` at each recorded time.
    pub fn dynkin_residual(&self) -> Vec<T> {
        self.values
            .iter()
            .zip(&self.compensator)
            .map(|(&v, &c)| v - self.initial_value - c)
            .collect()
    }
}

impl serde::Serialize for EventCounts {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("EventCounts", 3)?;
        st.serialize_field("jumps", &self.jumps)?;
        st.serialize_field("births", &self.births)?;
        st.serialize_field("deaths", &self.deaths)?;
        st.end()
    }
}

/// Result of [`run`].
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord<T> {
    pub start: T,
    pub horizon: T,
    pub initial_total: u64,
    pub final_total: u64,
    pub final_counts: EventCounts,
    /// Time of extinction, when it happened before the horizon.
    pub extinct_at: Option<T>,
    pub traces: Vec<ObserverTrace<T>>,
}

struct Running<T> {
    g: Vec<T>,
    q: Vec<T>,
    value: f64,
    drift: f64,
    integral: f64,
    sup: f64,
}

/// Simulates up to `horizon`, recording every observer on its grid.
///
/// The compensator integral is accumulated exactly between events, so the
/// Dynkin residual of a trace carries only Monte Carlo noise.
pub fn run<T: Scalar>(
    state: &mut ParticleState<'_, T>,
    horizon: T,
    observers: &[Observer<T>],
) -> Result<TrajectoryRecord<T>> {
    let t0 = state.time();
    if !(horizon >= t0) || !horizon.is_finite() {
        return Err(Error::param(format!("horizon {horizon} is before the current time {t0}")));
    }
    let graph = state.graph();
    let cloud = graph.cloud();
    let params = state.params();
    let w = site_weight(params.scale, cloud.dim()).as_f64();
    let growth = params.birth - params.death;

    let mut schedule: Vec<(T, usize)> = Vec::new();
    let mut running = Vec::with_capacity(observers.len());
    for (k, obs) in observers.iter().enumerate() {
        if obs.times.windows(2).any(|p| !(p[0] < p[1])) {
            return Err(Error::param(format!("observer `{}`: times must be strictly increasing", obs.id)));
        }
        if let (Some(&a), Some(&b)) = (obs.times.first(), obs.times.last()) {
            if a < t0 || b > horizon {
                return Err(Error::param(format!(
                    "observer `{}`: times must lie in [{t0}, {horizon}]",
                    obs.id
                )));
            }
        }
        schedule.extend(obs.times.iter().map(|&t| (t, k)));
        let g = match &obs.observable {
            Observable::Test(f) => site_values(cloud, params.scale, f),
            Observable::Sites(v) if v.len() == graph.len() => v.clone(),
            Observable::Sites(v) => {
                return Err(Error::param(format!(
                    "observer `{}`: {} site values for {} sites",
                    obs.id,
                    v.len(),
                    graph.len()
                )))
            }
        };
        let lg = apply_generator(graph, params.scale, &g);
        let q: Vec<T> = lg.iter().zip(&g).map(|(&l, &v)| l + growth * v).collect();
        let value = state.pair_with(&g).as_f64();
        let drift = state.pair_with(&q).as_f64();
        running.push(Running {
            g,
            q,
            value,
            drift,
            integral: 0.0,
            sup: value,
        });
    }
    schedule.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite times"));

    let mut traces: Vec<ObserverTrace<T>> = observers
        .iter()
        .zip(&running)
        .map(|(o, r)| ObserverTrace {
            id: o.id.clone(),
            times: Vec::with_capacity(o.times.len()),
            values: Vec::with_capacity(o.times.len()),
            compensator: Vec::with_capacity(o.times.len()),
            totals: Vec::with_capacity(o.times.len()),
            counts: Vec::with_capacity(o.times.len()),
            initial_value: T::of(r.value),
            supremum: T::zero(),
        })
        .collect();

    let initial_total = state.alive();
    let mut t = t0.as_f64();
    let mut next_obs = 0;
    let mut extinct_at = None;
    let mut events: u64 = 0;
    let end = horizon.as_f64();

    loop {
        let next_event = match state.holding_time() {
            Some(dt) => t + dt.as_f64(),
            None => {
                if extinct_at.is_none() && state.alive() == 0 && t < end {
                    extinct_at = Some(T::of(t));
                }
                f64::INFINITY
            }
        };
        while next_obs < schedule.len() && schedule[next_obs].0.as_f64() < next_event {
            let (ts, k) = schedule[next_obs];
            let r = &running[k];
            let tr = &mut traces[k];
            tr.times.push(ts);
            tr.values.push(T::of(r.value));
            tr.compensator.push(T::of(r.integral + r.drift * (ts.as_f64() - t).max(0.0)));
            tr.totals.push(state.alive());
            tr.counts.push(state.counts());
            next_obs += 1;
        }
        if next_event > end {
            break;
        }
        for r in running.iter_mut() {
            r.integral += r.drift * (next_event - t);
        }
        t = next_event;
        state.set_time(T::of(t));
        let kind = state.fire();
        for r in running.iter_mut() {
            let (dv, dq) = match kind {
                EventKind::Jump { from, to } => (
                    r.g[to].as_f64() - r.g[from].as_f64(),
                    r.q[to].as_f64() - r.q[from].as_f64(),
                ),
                EventKind::Birth { site } => (r.g[site].as_f64(), r.q[site].as_f64()),
                EventKind::Death { site } => (-r.g[site].as_f64(), -r.q[site].as_f64()),
            };
            r.value += w * dv;
            r.drift += w * dq;
            if r.value > r.sup {
                r.sup = r.value;
            }
        }
        events += 1;
        if events % RESYNC_INTERVAL == 0 {
            for r in running.iter_mut() {
                r.value = state.pair_with(&r.g).as_f64();
                r.drift = state.pair_with(&r.q).as_f64();
            }
        }
    }
    state.set_time(horizon);

    for (tr, r) in traces.iter_mut().zip(&running) {
        tr.supremum = T::of(r.sup);
    }
    Ok(TrajectoryRecord {
        start: t0,
        horizon,
        initial_total,
        final_total: state.alive(),
        final_counts: state.counts(),
        extinct_at,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{init_particles, DynamicsParams, InitialCondition};
    use crate::geometry::{build_graph, sample_poisson_cloud, PointCloud, Topology};
    use crate::stats::Summary;

    #[test]
    fn rejects_bad_grids() {
        let c = PointCloud::from_coords(2, 10.0_f64, 1.0, Topology::Free, vec![5.0, 5.0]).unwrap();
        let g = build_graph(c, 1.0).unwrap();
        let p = DynamicsParams::new(1.0, 0.0, 0.0).unwrap();
        let mut s = ParticleState::with_occupation(&g, vec![1], p, 0).unwrap();
        let f = Observable::Test(TestFunction::Constant { amplitude: 1.0, dim: 2 });
        let bad = [Observer::new("a", f.clone(), vec![0.5, 0.5])];
        assert!(run(&mut s, 1.0, &bad).is_err());
        let late = [Observer::new("a", f, vec![2.0])];
        assert!(run(&mut s, 1.0, &late).is_err());
    }

    #[test]
    fn yule_process_mean() {
        // Single isolated site, pure birth at rate 1: E[η_T] = e^T.
        let c = PointCloud::from_coords(2, 10.0_f64, 1.0, Topology::Free, vec![5.0, 5.0]).unwrap();
        let g = build_graph(c, 1.0).unwrap();
        let p = DynamicsParams::new(1.0, 1.0, 0.0).unwrap();
        let f = Observable::Test(TestFunction::Constant { amplitude: 1.0, dim: 2 });
        let obs = [Observer::new("one", f, vec![1.0])];
        let finals: Vec<f64> = (0..4_000)
            .map(|seed| {
                let mut s = ParticleState::with_occupation(&g, vec![1], p, seed).unwrap();
                let rec = run(&mut s, 1.0, &obs).unwrap();
                assert_eq!(rec.final_total as f64, rec.traces[0].values[0]);
                rec.final_total as f64
            })
            .collect();
        let s = Summary::of(&finals);
        assert!(s.within(std::f64::consts::E, 4.0), "{s:?}");
    }

    #[test]
    fn extinction_records_zeros() {
        let c = PointCloud::from_coords(2, 10.0_f64, 1.0, Topology::Free, vec![5.0, 5.0]).unwrap();
        let g = build_graph(c, 1.0).unwrap();
        let p = DynamicsParams::new(1.0, 0.0, 50.0).unwrap();
        let f = Observable::Test(TestFunction::Constant { amplitude: 1.0, dim: 2 });
        let obs = [Observer::new("one", f, vec![0.5, 1.0])];
        let mut s = ParticleState::with_occupation(&g, vec![1], p, 1).unwrap();
        let rec = run(&mut s, 1.0, &obs).unwrap();
        assert!(rec.extinct_at.is_some());
        assert_eq!(rec.traces[0].values, vec![0.0, 0.0]);
        assert_eq!(rec.final_counts.deaths, 1);
    }

    #[test]
    fn values_match_direct_observation() {
        let c = sample_poisson_cloud(1.0_f64, 20.0, 2, Topology::Free, 3).unwrap();
        let g = build_graph(c, 5.0).unwrap();
        let p = DynamicsParams::new(2.0, 0.3, 0.2).unwrap();
        let tf = TestFunction::gaussian(1.0, 1.5, vec![0.0, 0.0]).unwrap();
        let obs = [Observer::new("g", Observable::Test(tf.clone()), vec![0.05, 0.1])];
        let mut s = init_particles(&g, &InitialCondition::Constant(1), p, 3).unwrap();
        let rec = run(&mut s, 0.1, &obs).unwrap();
        let direct = s.observe(&tf);
        assert!((rec.traces[0].values[1] - direct).abs() < 1e-10 * direct.abs().max(1.0));
        assert!(rec.traces[0].supremum >= rec.traces[0].initial_value);
    }

    #[test]
    fn dynkin_residual_is_centered() {
        let c = sample_poisson_cloud(1.0_f64, 16.0, 2, Topology::Free, 5).unwrap();
        let g = build_graph(c, 4.0).unwrap();
        let p = DynamicsParams::new(2.0, 0.5, 0.25).unwrap();
        let tf = TestFunction::gaussian(1.0, 1.0, vec![0.0, 0.0]).unwrap();
        let obs = [Observer::new("g", Observable::Test(tf), vec![0.2])];
        let res: Vec<f64> = (0..300)
            .map(|seed| {
                let mut s = init_particles(&g, &InitialCondition::Constant(1), p, seed).unwrap();
                run(&mut s, 0.2, &obs).unwrap().traces[0].dynkin_residual()[0]
            })
            .collect();
        let s = Summary::of(&res);
        assert!(s.within(0.0, 4.0), "{s:?}");
    }
}
