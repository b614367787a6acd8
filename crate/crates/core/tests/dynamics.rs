use poisson_brw::dynamics::{
    ghost_bound_check, init_particles, kv_supremum_check, run, DynamicsParams, InitialCondition, Observable, Observer,
    ParticleState,
};
use poisson_brw::geometry::{build_graph, sample_poisson_cloud, PointCloud, Topology};
use poisson_brw::stats::Summary;
use poisson_brw::TestFn;

fn isolated_site() -> poisson_brw::Graph {
    let c = PointCloud::from_coords(2, 4.0_f64, 1.0, Topology::Free, vec![2.0, 2.0]).unwrap();
    build_graph(c, 1.0).unwrap()
}

fn population_mean(eta: u32, birth: f64, death: f64, replicas: u64) -> Summary {
    let g = isolated_site();
    let params = DynamicsParams::new(1.0, birth, death).unwrap();
    let totals: Vec<f64> = (0..replicas)
        .map(|seed| {
            let mut s = ParticleState::with_occupation(&g, vec![eta], params, seed).unwrap();
            run(&mut s, 1.0, &[]).unwrap().final_total as f64
        })
        .collect();
    Summary::of(&totals)
}

#[test]
fn yule_population_mean() {
    let s = population_mean(1, 1.0, 0.0, 10_000);
    assert!(s.within(std::f64::consts::E, 3.0), "{s:?}");
}

#[test]
fn pure_death_population_mean() {
    let s = population_mean(100, 0.0, 1.0, 2_000);
    assert!(s.within(100.0 * (-1.0f64).exp(), 3.0), "{s:?}");
}

#[test]
fn branching_mean_with_motion() {
    let c = sample_poisson_cloud(1.0_f64, 8.0, 2, Topology::Free, 4).unwrap();
    let g = build_graph(c, 6.0).unwrap();
    let params = DynamicsParams::new(1.0, 0.5, 0.0).unwrap();
    let totals: Vec<f64> = (0..500)
        .map(|seed| {
            let mut s = init_particles(&g, &InitialCondition::Constant(1), params, seed).unwrap();
            run(&mut s, 1.0, &[]).unwrap().final_total as f64
        })
        .collect();
    let s = Summary::of(&totals);
    assert!(s.within(g.len() as f64 * 0.5f64.exp(), 3.0), "{s:?}");
}

#[test]
fn poisson_initial_total() {
    let c = sample_poisson_cloud(1.0_f64, 10.0, 2, Topology::Free, 8).unwrap();
    let g = build_graph(c, 3.0).unwrap();
    let params = DynamicsParams::new(1.0, 0.0, 0.0).unwrap();
    let totals: Vec<f64> = (0..200)
        .map(|seed| init_particles(&g, &InitialCondition::Poisson(2.0), params, seed).unwrap().alive() as f64)
        .collect();
    let s = Summary::of(&totals);
    assert!(s.within(2.0 * g.len() as f64, 3.0), "{s:?}");
}

#[test]
fn profile_mass_in_probe_box() {
    // ⟨π_0, 1_K⟩ for K = [-1, 1]² has mean γ ∫_K ρ₀ with ρ₀ = 2 exp(-|u|²/2).
    let n = 4.0;
    let side = 8.0 * n;
    let ic = InitialCondition::parse("profile:gauss:2,1", 2).unwrap();
    let params = DynamicsParams::new(n, 0.0, 0.0).unwrap();
    let lo = [side / 2.0 - n; 2];
    let hi = [side / 2.0 + n; 2];
    let erf1 = libm_erf(1.0 / std::f64::consts::SQRT_2);
    let expected = 2.0 * 2.0 * std::f64::consts::PI * erf1 * erf1;
    let masses: Vec<f64> = (0..300)
        .map(|seed| {
            let c = sample_poisson_cloud(1.0_f64, side, 2, Topology::Free, 1_000 + seed).unwrap();
            let g = build_graph(c, 1.0).unwrap();
            let s = init_particles(&g, &ic, params, seed).unwrap();
            let inside = g.cloud().indices_in_box(&lo, &hi);
            inside.iter().map(|&x| s.occupation()[x] as f64).sum::<f64>() / (n * n)
        })
        .collect();
    let s = Summary::of(&masses);
    assert!(s.within(expected, 3.0), "{s:?} vs {expected}");
}

fn libm_erf(x: f64) -> f64 {
    statrs::function::erf::erf(x)
}

#[test]
fn observation_examples() {
    let c = PointCloud::from_coords(2, 10.0_f64, 1.0, Topology::Free, vec![1.0, 2.0, 7.0, 3.0]).unwrap();
    let g = build_graph(c, 15.0).unwrap();
    let gauss = TestFn::parse("gauss:3,2", 2).unwrap();
    let params = DynamicsParams::new(2.0, 0.0, 0.0).unwrap();

    let empty = ParticleState::with_occupation(&g, vec![0, 0], params, 1).unwrap();
    assert_eq!(empty.observe(&gauss), 0.0);

    let single = ParticleState::with_occupation(&g, vec![0, 1], params, 1).unwrap();
    let u = [(7.0 - 5.0) / 2.0, (3.0 - 5.0) / 2.0];
    assert!((single.observe(&gauss) - gauss.value(&u) / 4.0).abs() < 1e-15);

    let full = ParticleState::with_occupation(&g, vec![1, 1], params, 1).unwrap();
    assert_eq!(full.observe(&TestFn::parse("const:1", 2).unwrap()), 2.0 / 4.0);
}

#[test]
fn replay_is_bit_identical() {
    let c = sample_poisson_cloud(1.0_f64, 12.0, 2, Topology::Free, 3).unwrap();
    let g = build_graph(c, 5.0).unwrap();
    let params = DynamicsParams::new(2.0, 0.4, 0.3).unwrap();
    let obs = Observer::new(
        "g",
        Observable::Test(TestFn::parse("gauss:1,1", 2).unwrap()),
        vec![0.1, 0.2, 0.3],
    );
    let go = || {
        let mut s = init_particles(&g, &InitialCondition::Poisson(1.0), params, 99).unwrap();
        serde_json::to_string(&run(&mut s, 0.3, std::slice::from_ref(&obs)).unwrap()).unwrap()
    };
    assert_eq!(go(), go());
}

#[test]
fn dynkin_residual_vanishes_without_particles() {
    let c = sample_poisson_cloud(1.0_f64, 6.0, 2, Topology::Free, 2).unwrap();
    let g = build_graph(c, 3.0).unwrap();
    let params = DynamicsParams::new(1.0, 0.5, 0.5).unwrap();
    let mut s = init_particles(&g, &InitialCondition::Constant(0), params, 1).unwrap();
    let obs = Observer::new("g", Observable::Test(TestFn::parse("gauss:1,1", 2).unwrap()), vec![0.5, 1.0]);
    let rec = run(&mut s, 1.0, &[obs]).unwrap();
    assert!(rec.traces[0].dynkin_residual().iter().all(|&m| m == 0.0));
}

#[test]
fn dynkin_residual_mean_is_zero() {
    let c = sample_poisson_cloud(1.0_f64, 20.0, 2, Topology::Free, 11).unwrap();
    let g = build_graph(c, 6.0).unwrap();
    let params = DynamicsParams::new(2.0, 0.6, 0.3).unwrap();
    let ic = InitialCondition::parse("profile:gauss:1,1", 2).unwrap();
    let h = TestFn::parse("gauss:1,1.5", 2).unwrap();
    let residuals: Vec<f64> = (0..500)
        .map(|seed| {
            let mut s = init_particles(&g, &ic, params, seed).unwrap();
            let obs = Observer::new("h", Observable::Test(h.clone()), vec![0.5]);
            run(&mut s, 0.5, &[obs]).unwrap().traces[0].dynkin_residual()[0]
        })
        .collect();
    let s = Summary::of(&residuals);
    assert!(s.within(0.0, 3.0), "{s:?}");
}

#[test]
fn ghost_bound_in_unit_box() {
    let c = sample_poisson_cloud(2.0_f64, 10.0, 2, Topology::Free, 6).unwrap();
    let g = build_graph(c, 6.0).unwrap();
    let params = DynamicsParams::new(1.0, 0.5, 0.0).unwrap();
    let states: Vec<_> = (0..200)
        .map(|seed| {
            let mut s = init_particles(&g, &InitialCondition::Constant(1), params, seed).unwrap().with_ghosts();
            run(&mut s, 1.0, &[]).unwrap();
            s
        })
        .collect();
    let b = ghost_bound_check(&states, &[4.5, 4.5], &[5.5, 5.5], 1, 1.0).unwrap();
    assert!(b.holds(), "{b:?}");
}

#[test]
fn zero_observable_has_empty_tail() {
    let t = kv_supremum_check(&[0.0; 50], Some(&[0.1, 1.0, 10.0]), 0.0).unwrap();
    assert!(t.tail.iter().all(|&p| p == 0.0));
}

#[test]
fn doubling_threshold_halves_tail() {
    // Exact 1/A tail on a fine grid.
    let sups: Vec<f64> = (1..=4000).map(|k| 4000.0 / k as f64).collect();
    let grid = [4.0, 8.0, 16.0, 32.0];
    let t = kv_supremum_check(&sups, Some(&grid), 1.0).unwrap();
    for w in t.tail.windows(2) {
        assert!((w[1] / w[0] - 0.5).abs() < 0.02, "{:?}", t.tail);
    }
}
