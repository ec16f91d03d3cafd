//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Each criterion also has a wall-clock budget.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use coherence_core::closed_forms::*;
use coherence_core::graph::{cycle, path, perfect_tree};
use coherence_core::selection::{brute_force_select, SearchOptions};
use coherence_core::sim::{simulate_nc, simulate_nf, SimConfig};
use coherence_core::{
    coherence_nc, coherence_nf, growth_trajectory, leader_free_coherence, Dynamics, LeaderSet,
    Method, NodeId, ResistanceOracle, StubbornnessMap,
};
use common::{graph_of, random_connected};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            break;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
    out
}

fn search<T: coherence_core::Scalar>(
    g: &coherence_core::Graph<T>,
    k: usize,
    d: Dynamics,
) -> coherence_core::SelectionResult<T> {
    brute_force_select(
        g,
        k,
        d,
        &StubbornnessMap::default(),
        &SearchOptions::default(),
    )
    .expect("search runs")
}

fn route_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let n = rng.random_range(2..=40);
        let p = rng.random_range(0.0..0.3);
        let edges = random_connected(&mut rng, n, p, 0.1, 10.0);
        let g = graph_of(n, &edges);
        let k = rng.random_range(1..=5usize.min(n));
        let s = LeaderSet::new(sample(&mut rng, n, k).into_vec()).unwrap();
        let kappas: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..10.0)).collect();
        let kappa = StubbornnessMap::per_leader(&s, &kappas).unwrap();
        let nf_t = coherence_nf(&g, &s, Method::Trace).unwrap().value;
        let nf_r = coherence_nf(&g, &s, Method::Resistance).unwrap().value;
        let nc_t = coherence_nc(&g, &s, &kappa, Method::Trace).unwrap().value;
        let nc_r = coherence_nc(&g, &s, &kappa, Method::Resistance)
            .unwrap()
            .value;
        // every node a leader leaves nothing to compare
        let e_nf = if nf_t == 0.0 && nf_r.abs() < 1e-12 {
            0.0
        } else {
            rel_err(nf_t, nf_r)
        };
        let e = e_nf.max(rel_err(nc_t, nc_r));
        worst = worst.max(e);
        ensure(e <= 1e-9, || {
            format!("graph {trial}: n={n} k={k} nf {nf_t} vs {nf_r}, nc {nc_t} vs {nc_r}")
        })?;
    }
    Ok(format!("200 graphs, worst relative gap {worst:.2e}"))
}

fn cycle_placement() -> Outcome {
    let mut checked = 0;
    for n in 3..=16usize {
        let g = cycle::<f64>(n).unwrap();
        for k in 1..=4.min(n) {
            let res = search(&g, k, Dynamics::NoiseFree);
            for s in &res.optimal_sets {
                let gaps = GapVector::from_cycle_leaders(n as u64, s).unwrap();
                ensure(is_optimal_cycle_gaps(&gaps), || {
                    format!("n={n} k={k}: optimum {s:?} has gaps {:?}", gaps.gaps())
                })?;
            }
            let family = subsets(n, k)
                .into_iter()
                .map(|s| LeaderSet::new(s).unwrap())
                .filter(|s| {
                    is_optimal_cycle_gaps(&GapVector::from_cycle_leaders(n as u64, s).unwrap())
                })
                .count();
            ensure(res.optimal_sets.len() == family, || {
                format!(
                    "n={n} k={k}: {} optima, balanced family has {family}",
                    res.optimal_sets.len()
                )
            })?;
            for s in subsets(n, k) {
                let s = LeaderSet::new(s).unwrap();
                let closed: f64 =
                    cycle_nf_coherence(&GapVector::from_cycle_leaders(n as u64, &s).unwrap())
                        .unwrap();
                let trace = coherence_nf(&g, &s, Method::Trace).unwrap().value;
                ensure((closed - trace).abs() <= 1e-9, || {
                    format!("n={n} {s:?}: {closed} vs {trace}")
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} leader sets checked"))
}

fn path_placement() -> Outcome {
    let mut checked = 0;
    for n in 2..=14usize {
        let g = path::<f64>(n).unwrap();
        for k in 1..=4.min(n) {
            for s in subsets(n, k) {
                let s = LeaderSet::new(s).unwrap();
                let closed: f64 =
                    path_nf_coherence(&GapVector::from_path_leaders(n as u64, &s).unwrap())
                        .unwrap();
                let trace = coherence_nf(&g, &s, Method::Trace).unwrap().value;
                ensure((closed - trace).abs() <= 1e-9, || {
                    format!("n={n} {s:?}: {closed} vs {trace}")
                })?;
                checked += 1;
            }
            let opt: PathOptimum<f64> = path_nf_optimal(n as u64, k as u64).unwrap();
            let res = search(&g, k, Dynamics::NoiseFree);
            ensure((opt.value - res.value).abs() <= 1e-9, || {
                format!(
                    "n={n} k={k}: allocation {} vs search {}",
                    opt.value, res.value
                )
            })?;
        }
    }
    Ok(format!("{checked} leader sets checked"))
}

fn geometries(
    tree: &coherence_core::PerfectTree<f64>,
    sets: &[LeaderSet],
) -> BTreeSet<(u32, u32, u32)> {
    sets.iter()
        .map(|s| {
            let (a, b) = (s.as_slice()[0], s.as_slice()[1]);
            match TreeGeometry::of_pair(tree, a, b) {
                Some(g) => (g.d_xr, g.d_yr(), g.d_xy),
                // lowest common ancestor below the root
                None => (u32::MAX, u32::MAX, u32::MAX),
            }
        })
        .collect()
}

fn tree_case(arity: usize, want: (u32, u32, u32), value: f64, tol: f64) -> Outcome {
    let t = perfect_tree::<f64>(arity, 4).unwrap();
    let res = search(&t.graph, 2, Dynamics::NoiseFree);
    let found = geometries(&t, &res.optimal_sets);
    let expected_pairs = (0..t.graph.node_count())
        .flat_map(|a| (a + 1..t.graph.node_count()).map(move |b| (a, b)))
        .filter(|&(a, b)| {
            TreeGeometry::of_pair(&t, NodeId(a), NodeId(b))
                .is_some_and(|g| (g.d_xr, g.d_yr(), g.d_xy) == want)
        })
        .count();
    let summary = format!(
        "value {:.10}, {} optimal pairs with (d_xr, d_yr, d_xy) in {found:?}; {expected_pairs} pairs have {want:?}",
        res.value,
        res.optimal_sets.len()
    );
    ensure((res.value - value).abs() <= tol, || {
        format!("{summary}; expected value {value}")
    })?;
    ensure(
        found == BTreeSet::from([want]) && res.optimal_sets.len() == expected_pairs,
        || format!("{summary}; expected exactly the {want:?} pairs"),
    )?;
    Ok(summary)
}

fn binary_tree() -> Outcome {
    tree_case(2, (2, 2, 4), 33.5, 1e-8)
}

fn ternary_tree() -> Outcome {
    tree_case(3, (1, 1, 2), 183.25, 1e-8)
}

fn quaternary_tree() -> Outcome {
    tree_case(4, (0, 1, 1), 583.5, 1e-7)
}

fn omega_formula() -> Outcome {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for m in 2..=5u32 {
        for h in 2..=5u32 {
            let t = perfect_tree::<f64>(m as usize, h).unwrap();
            for d_xy in 1..=2 * h {
                for d_xr in 0..=h {
                    let Ok(geom) = TreeGeometry::new(m, h, d_xr, d_xy) else {
                        continue;
                    };
                    let (x, y) = geom.realize(&t).unwrap();
                    let s = LeaderSet::new([x.0, y.0]).unwrap();
                    let trace = coherence_nf(&t.graph, &s, Method::Trace).unwrap().value;
                    let half = tree_omega::<f64>(&geom).unwrap() / 2.0;
                    let e = rel_err(half, trace);
                    worst = worst.max(e);
                    ensure(e <= 1e-9, || {
                        format!("{geom:?}: Ω/2 = {half}, trace {trace}")
                    })?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!(
        "{checked} geometries, worst relative gap {worst:.2e}"
    ))
}

fn two_nc_leaders_on_cycle() -> Outcome {
    for n in (4..=24u64).step_by(2) {
        let values: Vec<f64> = (1..=n)
            .map(|i| cycle_nc_two_coherence(n, i, NcCycleRoute::Trace).unwrap())
            .collect();
        let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let argmins: Vec<u64> = (1..=n)
            .filter(|&i| values[(i - 1) as usize] == best)
            .collect();
        ensure(argmins == vec![(n + 2) / 2], || {
            format!("n={n}: minimized at {argmins:?}")
        })?;
        let closed: f64 = cycle_nc_optimal_value(n).unwrap();
        ensure((closed - best).abs() <= 1e-9, || {
            format!("n={n}: sweep {best}, closed form {closed}")
        })?;
    }
    let spot = (
        cycle_nc_optimal_value::<f64>(4).unwrap(),
        cycle_nc_optimal_value::<f64>(10).unwrap(),
    );
    ensure(
        (spot.0 - 5.0 / 3.0).abs() <= 1e-9 && (spot.1 - 7.0).abs() <= 1e-9,
        || format!("spot values {spot:?}"),
    )?;
    Ok("even n in 4..=24, minimum at i = (n+2)/2".into())
}

fn edge_updates() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(2..=20);
        let edges = random_connected(&mut rng, n, 0.2, 0.1, 10.0);
        let mut g = graph_of(n, &edges);
        let mut oracle = ResistanceOracle::new(&g).unwrap();
        for _ in 0..100 {
            let pair = sample(&mut rng, n, 2).into_vec();
            let (i, j) = (NodeId(pair[0]), NodeId(pair[1]));
            let w = rng.random_range(0.1..10.0);
            oracle = oracle.with_edge_added(i, j, w).unwrap();
            g = g.with_edge_added(i, j, w).unwrap();
            let fresh = ResistanceOracle::new(&g).unwrap();
            for p in g.nodes() {
                for q in g.nodes() {
                    let (a, b) = (oracle.get(p, q), fresh.get(p, q));
                    worst = worst.max((a - b).abs());
                    ensure((a - b).abs() <= 1e-10, || {
                        format!("n={n}: r({p:?},{q:?}) {a} vs {b}")
                    })?;
                }
            }
        }
    }
    Ok(format!("5000 updates, worst absolute gap {worst:.2e}"))
}

fn scaling() -> Outcome {
    let n = 2048u64;
    let k = 2u64;
    let opt: CycleOptimum<f64> = cycle_nf_optimal(n, k).unwrap();
    let ratio = opt.value * 12.0 * k as f64 / (n * n) as f64;
    ensure((ratio - 1.0).abs() <= 0.05, || {
        format!("value·12k/n² = {ratio}")
    })?;
    let mut parts = vec![format!("value·12k/n² = {ratio:.6}")];
    for n in [256usize, 512, 1024] {
        let v1 = leader_free_coherence(&cycle::<f64>(n).unwrap())
            .unwrap()
            .value;
        let v2 = leader_free_coherence(&cycle::<f64>(2 * n).unwrap())
            .unwrap()
            .value;
        let r = v2 / v1;
        ensure((3.6..=4.4).contains(&r), || {
            format!("V({})/V({n}) = {r}", 2 * n)
        })?;
        parts.push(format!("V({})/V({n}) = {r:.4}", 2 * n));
    }
    Ok(parts.join(", "))
}

fn growth() -> Outcome {
    let traj = growth_trajectory::<f64>(5, 64, false).unwrap();
    ensure(
        traj.final_node_count == 127 && traj.final_height == 6,
        || {
            format!(
                "final tree has {} nodes, height {}",
                traj.final_node_count, traj.final_height
            )
        },
    )?;
    let start: f64 = tree_omega::<f64>(&TreeGeometry::new(2, 5, 2, 4).unwrap()).unwrap() / 2.0;
    ensure((traj.steps[0].designated - start).abs() <= 1e-9, || {
        format!(
            "step 0 value {} vs closed form {start}",
            traj.steps[0].designated
        )
    })?;
    let not_min: Vec<usize> = traj
        .steps
        .iter()
        .filter(|s| s.designated > s.best_other)
        .map(|s| s.step)
        .collect();
    let tied: Vec<usize> = traj
        .steps
        .iter()
        .filter(|s| !s.designated_is_strict_min() && s.designated <= s.best_other)
        .map(|s| s.step)
        .collect();
    let summary = format!(
        "{} steps; designated pair beaten at {not_min:?}; tied for the minimum at {} steps {tied:?}",
        traj.steps.len(),
        tied.len()
    );
    ensure(
        traj.steps[1..].iter().all(|s| s.designated_is_strict_min()),
        || summary.clone(),
    )?;
    Ok(summary)
}

fn simulation() -> Outcome {
    let cfg = SimConfig {
        dt: 1e-3,
        horizon: 200.0,
        burn_in: 0.25,
        trials: 20,
        seed: 2024,
    };
    let mut lines = Vec::new();
    let mut check = |label: &str, est: coherence_core::sim::SimEstimate, analytic: f64| {
        let ok = (est.value - analytic).abs() <= 3.0 * est.stderr;
        lines.push(format!(
            "{label}: {:.4} ± {:.4} vs {analytic:.6}",
            est.value, est.stderr
        ));
        ensure(ok, || lines.join("; "))
    };
    let p2 = path::<f64>(2).unwrap();
    let c8 = cycle::<f64>(8).unwrap();
    let c4 = cycle::<f64>(4).unwrap();
    let s0 = LeaderSet::new([0]).unwrap();

    check("nf path2 {0}", simulate_nf(&p2, &s0, &cfg).unwrap(), 0.5)?;
    let all = LeaderSet::all(8);
    let est = simulate_nf(&c8, &all, &cfg).unwrap();
    ensure(est.value == 0.0, || format!("S=V gives {}", est.value))?;
    let s = LeaderSet::new([0, 4]).unwrap();
    let closed: f64 = cycle_nf_coherence(&GapVector::cycle(vec![4, 4]).unwrap()).unwrap();
    check(
        "nf cycle8 {0,4}",
        simulate_nf(&c8, &s, &cfg).unwrap(),
        closed,
    )?;

    let unit = StubbornnessMap::default();
    check(
        "nc path2 {0}",
        simulate_nc(&p2, &s0, &unit, &cfg).unwrap(),
        1.5,
    )?;
    // a stubbornness of 1e6 caps the stable step near 2e-6, so this case
    // trades horizon for step size to stay within the time budget
    let stiff = StubbornnessMap::uniform(1e6).unwrap();
    let stiff_cfg = SimConfig {
        dt: 1.5e-6,
        horizon: 20.0,
        ..cfg
    };
    let analytic = coherence_nc(&p2, &s0, &stiff, Method::Trace).unwrap().value;
    check(
        "nc path2 {0} κ=1e6",
        simulate_nc(&p2, &s0, &stiff, &stiff_cfg).unwrap(),
        analytic,
    )?;
    let s = LeaderSet::new([0, 2]).unwrap();
    check(
        "nc cycle4 {0,2}",
        simulate_nc(&c4, &s, &unit, &cfg).unwrap(),
        5.0 / 3.0,
    )?;
    Ok(lines.join("; "))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            title: "trace and resistance routes agree",
            budget: Duration::from_secs(30),
            run: route_equivalence,
        },
        Criterion {
            id: 2,
            title: "cycle optima are balanced gap vectors",
            budget: Duration::from_secs(60),
            run: cycle_placement,
        },
        Criterion {
            id: 3,
            title: "path closed form and marginal allocation",
            budget: Duration::from_secs(60),
            run: path_placement,
        },
        Criterion {
            id: 4,
            title: "binary tree h=4 optimal pairs",
            budget: Duration::from_secs(5),
            run: binary_tree,
        },
        Criterion {
            id: 5,
            title: "ternary tree h=4 optimal pairs",
            budget: Duration::from_secs(30),
            run: ternary_tree,
        },
        Criterion {
            id: 6,
            title: "quaternary tree h=4 optimal pairs",
            budget: Duration::from_secs(300),
            run: quaternary_tree,
        },
        Criterion {
            id: 7,
            title: "tree Ω formula against trace",
            budget: Duration::from_secs(120),
            run: omega_formula,
        },
        Criterion {
            id: 8,
            title: "two NC leaders on even cycles",
            budget: Duration::from_secs(10),
            run: two_nc_leaders_on_cycle,
        },
        Criterion {
            id: 9,
            title: "edge-addition resistance update",
            budget: Duration::from_secs(30),
            run: edge_updates,
        },
        Criterion {
            id: 10,
            title: "quadratic scaling on cycles",
            budget: Duration::from_secs(10),
            run: scaling,
        },
        Criterion {
            id: 11,
            title: "growth keeps the designated pair strictly best",
            budget: Duration::from_secs(120),
            run: growth,
        },
        Criterion {
            id: 12,
            title: "simulation matches analytic values",
            budget: Duration::from_secs(120),
            run: simulation,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > c.budget => {
                Err(format!("{msg}; took {elapsed:.2?}, budget {:?}", c.budget))
            }
            other => other,
        };
        match outcome {
            Ok(msg) => println!(
                "criterion {:>2} PASS [{elapsed:.2?}] {}: {msg}",
                c.id, c.title
            ),
            Err(msg) => {
                failed += 1;
                println!(
                    "criterion {:>2} FAIL [{elapsed:.2?}] {}: {msg}",
                    c.id, c.title
                );
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
