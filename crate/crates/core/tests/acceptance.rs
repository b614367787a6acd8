//! End-to-end acceptance suite.
//!
//! Runs every numbered criterion in order and prints one line per criterion:
//!
//! ```text
//! criterion 04 PASS  variational bound: ...
//! ```
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test --release --test acceptance -- 3 10`. The process exits with a
//! failure status when any selected criterion fails.

use std::time::Instant;

use poisson_brw::dynamics::{
    ghost_bound_check, init_particles, kv_supremum_check, run, triple_norm, DynamicsParams, InitialCondition,
    Observable, Observer,
};
use poisson_brw::geometry::{build_graph, sample_poisson_cloud, PercolationSpec, PointCloud, Topology};
use poisson_brw::harness::{emit_report, parse_config, run_hydro_experiment, HydroOptions};
use poisson_brw::homogenize::{
    axis, generator_l2_decay, msd_diffusivity, resolvent_residual, site_values, solve_corrector, solve_resolvent,
};
use poisson_brw::rng::{derive_seed, TAG_REPLICA};
use poisson_brw::stats::{log_log_slope, Summary};
use poisson_brw::{Graph, TestFn};

const ROOT: u64 = 20_240_611;
const THREE_PI: f64 = 3.0 * std::f64::consts::PI;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(u32, &str, Check); 12] = [
        (1, "conservation", conservation),
        (2, "branching mean", branching_mean),
        (3, "sigma2 cross-validation", sigma_cross_validation),
        (4, "variational bound", variational_bound),
        (5, "deterministic grid", deterministic_grid),
        (6, "resolvent convergence", resolvent_convergence),
        (7, "generator decay", generator_decay),
        (8, "martingale scaling", martingale_scaling),
        (9, "ghost bound", ghost_bound),
        (10, "hydrodynamic limit", hydrodynamic_limit),
        (11, "percolation monotonicity", percolation_monotonicity),
        (12, "supremum tail shape", supremum_tail),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:02} {verdict}  {name}: {} [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

fn list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn free_graph(gamma: f64, side: f64, cutoff: f64, seed: u64) -> Graph {
    let cloud = sample_poisson_cloud(gamma, side, 2, Topology::Free, seed).unwrap();
    build_graph(cloud, cutoff).unwrap()
}

fn torus_graph(side: f64, cutoff: f64, seed: u64) -> Graph {
    let cloud = sample_poisson_cloud(1.0, side, 2, Topology::Periodic, seed).unwrap();
    build_graph(cloud, cutoff).unwrap()
}

fn corrector_sigma2(graph: &Graph) -> (f64, f64) {
    let (mut s, mut z) = (0.0, 0.0);
    for k in 0..2 {
        let c = solve_corrector(graph, &axis(2, k), 1e-8, None).unwrap();
        s += c.sigma2 / 2.0;
        z += c.zero_energy / 2.0;
    }
    (s, z)
}

fn conservation() -> Outcome {
    let graph = free_graph(1.0, 40.0, 15.0, derive_seed(ROOT, &[1]));
    let params = DynamicsParams::new(1.0, 0.0, 0.0).unwrap();
    let times: Vec<f64> = (1..=10).map(|k| 0.5 * k as f64).collect();
    let total = TestFn::parse("const:1", 2).unwrap();
    let mut violations = 0;
    let mut jumps = 0;
    let mut initial = 0;
    for r in 0..10u64 {
        let mut s = init_particles(&graph, &InitialCondition::Poisson(1.0), params, derive_seed(ROOT, &[1, r])).unwrap();
        let obs = Observer::new("total", Observable::Test(total.clone()), times.clone());
        let rec = run(&mut s, 5.0, &[obs]).unwrap();
        initial += rec.initial_total;
        jumps += rec.final_counts.jumps;
        violations += rec.traces[0].totals.iter().filter(|&&t| t != rec.initial_total).count();
        violations += usize::from(rec.final_total != rec.initial_total);
    }
    outcome(
        violations == 0,
        format!("{initial} particles over 10 replicas, {jumps} jumps, {violations} count changes"),
    )
}

fn branching_mean() -> Outcome {
    let graph = free_graph(1.0, 20.0, 15.0, derive_seed(ROOT, &[2]));
    let params = DynamicsParams::new(1.0, 0.5, 0.2).unwrap();
    let totals: Vec<f64> = (0..500u64)
        .map(|r| {
            let mut s =
                init_particles(&graph, &InitialCondition::Constant(1), params, derive_seed(ROOT, &[2, r])).unwrap();
            run(&mut s, 2.0, &[]).unwrap().final_total as f64
        })
        .collect();
    let expected = graph.len() as f64 * 0.6f64.exp();
    let s = Summary::of(&totals);
    outcome(
        s.within(expected, 3.0),
        format!("mean {:.2} ± {:.2}, expected {:.2}", s.mean, s.stderr, expected),
    )
}

fn sigma_cross_validation() -> Outcome {
    let graph = torus_graph(60.0, 15.0, derive_seed(ROOT, &[3]));
    let (sc, _) = corrector_sigma2(&graph);
    let msd = msd_diffusivity(&graph, 100.0, 4000, derive_seed(ROOT, &[3, 1])).unwrap();
    let gap = (sc - msd.sigma2).abs();
    let agree = gap <= 0.05 * sc || gap <= 3.0 * msd.stderr;
    let doubled = torus_graph(120.0, 15.0, derive_seed(ROOT, &[3, 2]));
    let (sd, _) = corrector_sigma2(&doubled);
    let shift = (sd - sc).abs() / sc;
    outcome(
        agree && shift < 0.05,
        format!(
            "corrector {sc:.4}, msd {:.4} ± {:.4}; L=120 corrector {sd:.4} (shift {:.2}%)",
            msd.sigma2,
            msd.stderr,
            100.0 * shift
        ),
    )
}

fn variational_bound() -> Outcome {
    let graph = torus_graph(60.0, 15.0, derive_seed(ROOT, &[4]));
    let (s, z) = corrector_sigma2(&graph);
    let dev = (z - THREE_PI).abs() / THREE_PI;
    outcome(
        s < z && dev < 0.05,
        format!("sigma2 {s:.4} < zero-corrector energy {z:.4}; energy vs 3π off by {:.2}%", 100.0 * dev),
    )
}

fn deterministic_grid() -> Outcome {
    let cutoff = 6.0;
    let cloud = PointCloud::<f64>::unit_grid(2, 20).unwrap();
    let graph = build_graph(cloud, cutoff).unwrap();
    let c = solve_corrector(&graph, &axis(2, 0), 1e-12, None).unwrap();
    let psi_max = c.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut lattice = 0.0;
    let k = cutoff as i64;
    for i in -k..=k {
        for j in -k..=k {
            let d = ((i * i + j * j) as f64).sqrt();
            if d > 0.0 && d <= cutoff {
                lattice += 0.5 * (-d).exp() * (i * i) as f64;
            }
        }
    }
    let rel = (c.sigma2 - lattice).abs() / lattice;
    outcome(
        psi_max < 1e-8 && rel < 1e-6,
        format!("max|psi| {psi_max:.2e}, sigma2 {:.10} vs lattice sum {lattice:.10}", c.sigma2),
    )
}

fn resolvent_convergence() -> Outcome {
    let cutoff = 8.0;
    let (sigma2, _) = corrector_sigma2(&torus_graph(60.0, cutoff, derive_seed(ROOT, &[6])));
    let g = TestFn::parse("gauss:1,1", 2).unwrap();
    let mut distances = Vec::new();
    let mut worst_residual = 0.0f64;
    for n in [5u32, 10, 20] {
        let graph = free_graph(1.0, 10.0 * n as f64, cutoff, derive_seed(ROOT, &[6, n as u64]));
        let sol = solve_resolvent(&graph, n as f64, 1.0, &g, sigma2, 1e-10).unwrap();
        let check = resolvent_residual(&graph, n as f64, 1.0, &g, sigma2, &sol.values);
        worst_residual = worst_residual.max(sol.residual).max(check);
        distances.push(sol.l2_distance);
    }
    let decreasing = distances.windows(2).all(|p| p[1] < p[0]);
    outcome(
        decreasing && worst_residual <= 1e-8,
        format!("L2 distance at N=5,10,20: {}; worst residual {worst_residual:.1e}", list(&distances)),
    )
}

fn generator_decay() -> Outcome {
    let scales = [5.0, 10.0, 20.0, 40.0];
    let graph = free_graph(1.0, 8.0 * 40.0, 8.0, derive_seed(ROOT, &[7]));
    let g = TestFn::parse("gauss:1,1", 2).unwrap();
    let decay = generator_l2_decay(&graph, &scales, &g);
    let violations = decay.windows(2).filter(|p| p[1] >= p[0]).count();
    outcome(
        violations <= 1,
        format!("N^-n ||L^N G|| at N=5,10,20,40: {}; {violations} increases", list(&decay)),
    )
}

fn martingale_scaling() -> Outcome {
    let g = TestFn::parse("gauss:1,2", 2).unwrap();
    let ic = InitialCondition::parse("profile:gauss:0.25,2", 2).unwrap();
    let horizon = 0.25;
    let mut scaled_var = Vec::new();
    let mut lines = Vec::new();
    let mut centered = true;
    for n in [5u32, 10, 20] {
        let graph = free_graph(1.0, 16.0 * n as f64, 8.0, derive_seed(ROOT, &[8, n as u64]));
        let params = DynamicsParams::new(n as f64, 0.5, 0.2).unwrap();
        let residuals: Vec<f64> = (0..200u64)
            .map(|r| {
                let mut s = init_particles(&graph, &ic, params, derive_seed(ROOT, &[8, n as u64, TAG_REPLICA, r])).unwrap();
                let obs = Observer::new("G", Observable::Test(g.clone()), vec![horizon]);
                let rec = run(&mut s, horizon, &[obs]).unwrap();
                rec.traces[0].dynkin_residual()[0]
            })
            .collect();
        let s = Summary::of(&residuals);
        centered &= s.within(0.0, 3.0);
        let v = s.variance * (n * n) as f64;
        scaled_var.push(v);
        lines.push(format!("N={n}: mean {:.2e} ± {:.1e}, N²Var {v:.4}", s.mean, s.stderr));
    }
    let slope = log_log_slope(&[5.0, 10.0, 20.0], &scaled_var).unwrap_or(f64::NAN);
    outcome(
        centered && slope <= 0.2,
        format!("{}; slope {slope:.3}", lines.join(", ")),
    )
}

fn ghost_bound() -> Outcome {
    let horizon = 1.0;
    let graph = free_graph(1.0, 20.0, 8.0, derive_seed(ROOT, &[9]));
    let params = DynamicsParams::new(1.0, 0.5, 0.0).unwrap();
    let center = graph.cloud().center();
    let probe = (0..graph.len())
        .min_by(|&a, &b| {
            let da: f64 = graph.cloud().point(a).iter().zip(&center).map(|(p, c)| (p - c).powi(2)).sum();
            let db: f64 = graph.cloud().point(b).iter().zip(&center).map(|(p, c)| (p - c).powi(2)).sum();
            da.total_cmp(&db)
        })
        .unwrap();
    let p = graph.cloud().point(probe);
    let lo: Vec<f64> = p.iter().map(|v| v - 0.5).collect();
    let hi: Vec<f64> = p.iter().map(|v| v + 0.5).collect();
    let states: Vec<_> = (0..200u64)
        .map(|r| {
            let mut s = init_particles(&graph, &InitialCondition::Constant(1), params, derive_seed(ROOT, &[9, r]))
                .unwrap()
                .with_ghosts();
            run(&mut s, horizon, &[]).unwrap();
            s
        })
        .collect();
    let b = ghost_bound_check(&states, &lo, &hi, 1, horizon).unwrap();
    outcome(
        b.holds() && b.sites > 0,
        format!("{} sites in K: mean alive+ghost {:.3} ± {:.3} <= bound {:.3}", b.sites, b.lhs, b.lhs_stderr, b.rhs),
    )
}

const HYDRO_CONFIG: &str = r#"
observables = ["gauss:1,1"]

[geometry]
gamma = 1.0
side = 16.0
cutoff = 8.0
resample = "replica"

[dynamics]
birth = 0.7
death = 0.2
horizon = 0.5
initial = "profile:gauss:2,1"
scales = [5, 10, 20]
replicas = [1600, 400, 100]

[homogenization]
samples = 16

[seeds]
root = 2024
"#;

fn hydrodynamic_limit() -> Outcome {
    let cfg = parse_config(HYDRO_CONFIG).unwrap();
    let report = match run_hydro_experiment(&cfg, &HydroOptions::default()) {
        Ok(r) => r,
        Err(f) => return outcome(false, format!("experiment failed: {}", f.error)),
    };
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("hydro");
    let written = emit_report(&report, &dir).is_ok();
    let errors: Vec<f64> = report.errors.iter().map(|r| r.rel_error).collect();
    let decreasing = errors.len() == 3 && errors.windows(2).all(|p| p[1] < p[0]);
    let last = errors.last().copied().unwrap_or(f64::INFINITY);
    let rows: Vec<String> = report
        .errors
        .iter()
        .map(|r| format!("N={}: {:.4} ± {:.4} ({:.2}%)", r.scale, r.mean, r.stderr, 100.0 * r.rel_error))
        .collect();
    let sigma = report.sigma.as_ref().map(|s| s.sigma2).unwrap_or(f64::NAN);
    let reference = report.errors.first().map(|r| r.pde_ref).unwrap_or(f64::NAN);
    outcome(
        decreasing && last < 0.10 && written,
        format!("sigma2 {sigma:.4}, reference {reference:.4}; {}", rows.join(", ")),
    )
}

fn percolation_monotonicity() -> Outcome {
    let seed = derive_seed(ROOT, &[11]);
    let complete = torus_graph(60.0, 15.0, seed);
    let (s_full, _) = corrector_sigma2(&complete);
    let long = PercolationSpec::LongRange { alpha: 1.5, beta: 1.0 }.apply(complete.clone(), seed).unwrap();
    let (s_long, _) = corrector_sigma2(&long);
    let free = PercolationSpec::ScaleFree { alpha: 1.5, beta: 1.0, tau: 3.0 }.apply(complete, seed).unwrap();
    let (s_free, _) = corrector_sigma2(&free);
    outcome(
        s_long <= s_full && s_free <= s_full,
        format!("complete {s_full:.4}, long-range {s_long:.4}, scale-free {s_free:.4}"),
    )
}

fn supremum_tail() -> Outcome {
    let n = 2.0;
    let graph = free_graph(1.0, 10.0 * n, 8.0, derive_seed(ROOT, &[12]));
    let h = TestFn::parse("gauss:1,1", 2).unwrap();
    let params = DynamicsParams::new(n, 0.0, 0.0).unwrap();
    let sups: Vec<f64> = (0..2000u64)
        .map(|r| {
            let mut s = init_particles(&graph, &InitialCondition::Constant(1), params, derive_seed(ROOT, &[12, r])).unwrap();
            let obs = Observer::new("H", Observable::Test(h.clone()), vec![1.0]);
            run(&mut s, 1.0, &[obs]).unwrap().traces[0].supremum
        })
        .collect();
    let norm = triple_norm(&graph, n, &site_values(graph.cloud(), n, &h));
    let tail = kv_supremum_check(&sups, None, norm).unwrap();
    let slope = tail.slope.unwrap_or(f64::NAN);
    outcome(
        slope <= -0.8,
        format!("fitted tail slope {slope:.2}, |||H||| {norm:.4}, tail constant {:.3}", tail.constant),
    )
}
