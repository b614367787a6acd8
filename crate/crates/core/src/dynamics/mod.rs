//! Exact continuous-time simulation of the branching random walk.
//!
//! Each particle jumps from `x` to `y` at rate `N² r(x,y)`, splits at rate
//! `b` and dies at rate `d`. Events are drawn with the Gillespie method; the
//! site of the next event is located in a Fenwick tree of per-site weights and
//! the jump target in the graph's alias table, so one event costs
//! `O(log |V|)`.

mod checks;
mod initial;
mod run;
mod state;

pub use checks::{ghost_bound_check, kv_supremum_check, triple_norm, GhostBound, KvTail, KV_TAIL_WINDOW};
pub use initial::InitialCondition;
pub use run::{run, Observable, Observer, ObserverTrace, TrajectoryRecord};
pub use state::{
    init_particles, DynamicsParams, EventCounts, EventKind, EventRecord, ParticleState, RESYNC_INTERVAL,
};
