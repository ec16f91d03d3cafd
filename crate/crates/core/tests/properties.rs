mod common;

use coherence_core::closed_forms::{tree_omega, TreeGeometry};
use coherence_core::electrical::{resistance, resistance_to_set, ResistanceOracle};
use coherence_core::graph::{cycle, path, perfect_tree};
use coherence_core::io::{parse_edge_list, parse_json_graph, write_edge_list, write_json_graph};
use coherence_core::selection::{brute_force_select, SearchOptions};
use coherence_core::{
    coherence_nc, coherence_nf, leader_free_coherence, Dynamics, Graph, LeaderSet, Method, NodeId,
    StubbornnessMap,
};
use common::*;
use proptest::prelude::*;

fn leaders_from(n: usize, picks: &[prop::sample::Index]) -> LeaderSet {
    let mut ids: Vec<usize> = picks.iter().map(|p| p.index(n)).collect();
    ids.sort_unstable();
    ids.dedup();
    LeaderSet::new(ids).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_rows_sum_to_zero((n, edges) in connected_graph(30)) {
        let g = graph_of(n, &edges);
        let l = g.laplacian();
        let scale: f64 = edges.iter().map(|e| e.2).sum();
        for i in 0..n {
            let s: f64 = l.row(i).iter().sum();
            prop_assert!(s.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn graph_distance_is_a_metric((n, edges) in connected_graph(50)) {
        let g = graph_of(n, &edges);
        let d: Vec<Vec<f64>> = g.nodes().map(|u| g.distances_from(u).unwrap().into_iter().map(Option::unwrap).collect()).collect();
        for a in 0..n {
            prop_assert_eq!(d[a][a], 0.0);
            for b in 0..n {
                prop_assert!((d[a][b] - d[b][a]).abs() <= 1e-12 * d[a][b]);
                if a != b {
                    prop_assert!(d[a][b] > 0.0);
                }
                for c in 0..n {
                    prop_assert!(d[a][c] <= d[a][b] + d[b][c] + 1e-9);
                }
            }
        }
    }

    #[test]
    fn resistance_matches_dense_pseudoinverse((n, edges) in connected_graph(25)) {
        let g = graph_of(n, &edges);
        let oracle = ResistanceOracle::new(&g).unwrap();
        let inv = all_pairs_inverse(n, &edges);
        for a in 0..n {
            for b in 0..n {
                let want = inv[a][a] + inv[b][b] - inv[a][b] - inv[b][a];
                prop_assert!((oracle.get(NodeId(a), NodeId(b)) - want).abs() <= 1e-9 * want.abs().max(1.0));
            }
        }
        let (a, b) = (0, n - 1);
        let direct = resistance(&g, NodeId(a), NodeId(b)).unwrap();
        prop_assert!(rel_close(direct, oracle.get(NodeId(a), NodeId(b)), 1e-9));
    }

    #[test]
    fn resistance_never_exceeds_distance((n, edges) in connected_graph(25)) {
        let g = graph_of(n, &edges);
        let oracle = ResistanceOracle::new(&g).unwrap();
        // path length measured in resistances, 1/w per edge
        let lengths: Vec<_> = edges.iter().map(|&(u, v, w)| (u, v, 1.0 / w)).collect();
        let h = graph_of(n, &lengths);
        for a in g.nodes() {
            let d = h.distances_from(a).unwrap();
            for b in g.nodes() {
                let r = oracle.get(a, b);
                prop_assert!(r <= d[b.0].unwrap() * (1.0 + 1e-9) + 1e-12);
            }
        }
    }

    #[test]
    fn tree_resistance_equals_path_length((n, edges) in connected_graph(30)) {
        // keep only the spanning tree part
        let tree: Vec<_> = edges.into_iter().take(n - 1).collect();
        let g = graph_of(n, &tree);
        let oracle = ResistanceOracle::new(&g).unwrap();
        let inv_weights: Vec<(usize, usize, f64)> = tree.iter().map(|&(u, v, w)| (u, v, 1.0 / w)).collect();
        let h = graph_of(n, &inv_weights);
        for a in g.nodes() {
            let d = h.distances_from(a).unwrap();
            for b in g.nodes() {
                prop_assert!(rel_close(oracle.get(a, b), d[b.0].unwrap(), 1e-9) || d[b.0].unwrap() == 0.0);
            }
        }
    }

    #[test]
    fn edge_addition_update_matches_recompute_and_never_increases(
        (n, edges) in connected_graph(20),
        i in any::<prop::sample::Index>(),
        j in any::<prop::sample::Index>(),
        w in 0.1f64..5.0,
    ) {
        let (i, j) = (i.index(n), j.index(n));
        prop_assume!(i != j);
        let g = graph_of(n, &edges);
        let before = ResistanceOracle::new(&g).unwrap();
        let after = before.with_edge_added(NodeId(i), NodeId(j), w).unwrap();
        let fresh = ResistanceOracle::new(&g.with_edge_added(NodeId(i), NodeId(j), w).unwrap()).unwrap();
        for p in g.nodes() {
            for q in g.nodes() {
                let (old, new, want) = (before.get(p, q), after.get(p, q), fresh.get(p, q));
                prop_assert!((new - want).abs() <= 1e-10 * want.max(1.0));
                prop_assert!(new <= old + 1e-12 * old.max(1.0));
            }
        }
    }

    #[test]
    fn set_resistance_matches_shorted_oracle(
        (n, edges) in connected_graph(20),
        picks in proptest::collection::vec(any::<prop::sample::Index>(), 1..5),
    ) {
        let g = graph_of(n, &edges);
        let s = leaders_from(n, &picks);
        let oracle = ResistanceOracle::new(&g).unwrap();
        let schur = oracle.set_resistances(&s).unwrap();
        for u in g.nodes() {
            let want = set_resistance_oracle(n, &edges, u.0, &s.indices());
            let direct = if s.contains(u) { 0.0 } else { resistance_to_set(&g, u, &s).unwrap() };
            prop_assert!((schur[u.0] - want).abs() <= 1e-9 * want.max(1.0));
            prop_assert!((direct - want).abs() <= 1e-9 * want.max(1.0));
        }
    }

    #[test]
    fn two_leader_fast_path_matches_direct_solve(
        (n, edges) in connected_graph(25),
        x in any::<prop::sample::Index>(),
        y in any::<prop::sample::Index>(),
    ) {
        let (x, y) = (x.index(n), y.index(n));
        prop_assume!(x != y);
        let g = graph_of(n, &edges);
        let oracle = ResistanceOracle::new(&g).unwrap();
        let s = LeaderSet::new([x, y]).unwrap();
        let mut total = 0.0;
        for u in g.nodes().filter(|u| !s.contains(*u)) {
            let fast = oracle.two_leader_resistance(u, NodeId(x), NodeId(y));
            let direct = resistance_to_set(&g, u, &s).unwrap();
            prop_assert!((fast - direct).abs() <= 1e-9 * direct.max(1.0));
            total += direct;
        }
        let c = oracle.two_leader_coherence(NodeId(x), NodeId(y)).unwrap();
        prop_assert!(rel_close(c, total / 2.0, 1e-9));
    }

    #[test]
    fn cut_vertex_additivity(
        (na, ea) in connected_graph(15),
        (nb, eb) in connected_graph(15),
        xa in any::<prop::sample::Index>(),
        xb in any::<prop::sample::Index>(),
        ua in any::<prop::sample::Index>(),
        picks in proptest::collection::vec(any::<prop::sample::Index>(), 1..4),
    ) {
        // B's nodes are shifted by na, and B's `xb` is identified with A's `xa`
        let (xa, xb, u) = (xa.index(na), xb.index(nb), ua.index(na));
        prop_assume!(u != xa);
        let relabel = |v: usize| if v == xb { xa } else if v < xb { na + v } else { na + v - 1 };
        let n = na + nb - 1;
        let mut edges = ea.clone();
        edges.extend(eb.iter().map(|&(a, b, w)| (relabel(a), relabel(b), w)));
        let s_ids: Vec<usize> = {
            let mut v: Vec<usize> = picks.iter().map(|p| relabel(p.index(nb))).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let s = LeaderSet::new(s_ids).unwrap();
        let g = graph_of(n, &edges);
        let lhs = resistance_to_set(&g, NodeId(u), &s).unwrap();
        let to_x = resistance(&g, NodeId(u), NodeId(xa)).unwrap();
        let x_to_s = if s.contains(NodeId(xa)) { 0.0 } else { resistance_to_set(&g, NodeId(xa), &s).unwrap() };
        prop_assert!((lhs - (to_x + x_to_s)).abs() <= 1e-9 * lhs.max(1.0));
    }

    #[test]
    fn coherence_routes_agree_with_dense_oracle(
        (n, edges) in connected_graph(30),
        picks in proptest::collection::vec(any::<prop::sample::Index>(), 1..6),
        kappa in 0.2f64..5.0,
    ) {
        let g = graph_of(n, &edges);
        let s = leaders_from(n, &picks);
        let k = StubbornnessMap::uniform(kappa).unwrap();
        let nf_t = coherence_nf(&g, &s, Method::Trace).unwrap().value;
        let nf_r = coherence_nf(&g, &s, Method::Resistance).unwrap().value;
        let nc_t = coherence_nc(&g, &s, &k, Method::Trace).unwrap().value;
        let nc_r = coherence_nc(&g, &s, &k, Method::Resistance).unwrap().value;
        let nf_o = nf_oracle(n, &edges, &s.indices());
        let nc_o = nc_oracle(n, &edges, &s.indices(), &vec![kappa; s.len()]);
        prop_assert!(rel_close(nf_t, nf_o, 1e-9) || nf_o == 0.0 && nf_t == 0.0);
        prop_assert!(rel_close(nf_r, nf_o, 1e-9) || nf_o == 0.0 && nf_r.abs() < 1e-12);
        prop_assert!(rel_close(nc_t, nc_o, 1e-9));
        prop_assert!(rel_close(nc_r, nc_o, 1e-9));
    }

    #[test]
    fn adding_a_leader_never_hurts(
        (n, edges) in connected_graph(30),
        picks in proptest::collection::vec(any::<prop::sample::Index>(), 1..4),
        extra in any::<prop::sample::Index>(),
    ) {
        let g = graph_of(n, &edges);
        let s = leaders_from(n, &picks);
        let bigger = s.with(NodeId(extra.index(n)));
        let a = coherence_nf(&g, &s, Method::Trace).unwrap().value;
        let b = coherence_nf(&g, &bigger, Method::Trace).unwrap().value;
        prop_assert!(b <= a * (1.0 + 1e-12));
    }

    #[test]
    fn single_leader_is_never_better_than_leader_free((n, edges) in connected_graph(30)) {
        let g = graph_of(n, &edges);
        let v = leader_free_coherence(&g).unwrap().value;
        let inv = all_pairs_inverse(n, &edges);
        let pinv_trace: f64 = (0..n).map(|i| inv[i][i] - 1.0 / n as f64).sum();
        prop_assert!(rel_close(v, pinv_trace / 2.0, 1e-9));
        for leader in 0..n {
            let s = LeaderSet::new([leader]).unwrap();
            prop_assert!(coherence_nf(&g, &s, Method::Trace).unwrap().value >= v * (1.0 - 1e-12));
        }
    }

    #[test]
    fn very_stubborn_leaders_act_pinned(
        (n, edges) in connected_graph(25),
        picks in proptest::collection::vec(any::<prop::sample::Index>(), 1..4),
    ) {
        let g = graph_of(n, &edges);
        let s = leaders_from(n, &picks);
        prop_assume!(s.len() < n);
        let k = StubbornnessMap::uniform(1e6).unwrap();
        let nc = coherence_nc(&g, &s, &k, Method::Trace).unwrap().value;
        let nf = coherence_nf(&g, &s, Method::Trace).unwrap().value;
        prop_assert!(rel_close(nc, nf, 1e-3));
    }

    #[test]
    fn edge_list_round_trip((n, edges) in connected_graph(30), isolated in 0usize..3) {
        let g = graph_of(n + isolated, &edges);
        let text = write_edge_list(&g);
        let back: Graph<f64> = parse_edge_list(&text).unwrap();
        prop_assert_eq!(&back, &g);
        let json = write_json_graph(&g).to_string();
        let again: Graph<f64> = parse_json_graph(&json).unwrap();
        prop_assert_eq!(&again, &g);
    }

    #[test]
    fn tree_omega_is_symmetric_in_the_leaders(m in 2u32..7, h in 1u32..8, a in 0u32..16, d in 1u32..16) {
        if let Ok(geom) = TreeGeometry::new(m, h, a, d) {
            let w = tree_omega::<f64>(&geom).unwrap();
            let s = tree_omega::<f64>(&geom.swapped()).unwrap();
            prop_assert!(rel_close(w, s, 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn selection_is_deterministic_and_supersets_do_not_hurt(
        (n, edges) in connected_graph(12),
        k in 1usize..4,
        extra in any::<prop::sample::Index>(),
    ) {
        prop_assume!(k <= n);
        let g = graph_of(n, &edges);
        let kappa = StubbornnessMap::default();
        for d in [Dynamics::NoiseFree, Dynamics::NoiseCorrupted] {
            let a = brute_force_select(&g, k, d, &kappa, &SearchOptions::default()).unwrap();
            let b = brute_force_select(&g, k, d, &kappa, &SearchOptions::default()).unwrap();
            prop_assert_eq!(&a.optimal_sets, &b.optimal_sets);
            prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
            let best = &a.optimal_sets[0];
            let bigger = best.with(NodeId(extra.index(n)));
            let v = match d {
                Dynamics::NoiseFree => coherence_nf(&g, &bigger, Method::Trace).unwrap().value,
                _ => coherence_nc(&g, &bigger, &kappa, Method::Trace).unwrap().value,
            };
            prop_assert!(v <= a.value * (1.0 + 1e-12));
        }
    }
}

#[test]
fn generated_families_are_connected() {
    for n in 3..30 {
        assert!(cycle::<f64>(n).unwrap().is_connected());
        assert!(path::<f64>(n).unwrap().is_connected());
    }
    for m in 2..5 {
        for h in 0..5 {
            assert!(perfect_tree::<f64>(m, h).unwrap().graph.is_connected());
        }
    }
}

#[test]
fn cycle_resistance_is_strictly_below_distance() {
    for n in 3..20 {
        let g = cycle::<f64>(n).unwrap();
        let o = ResistanceOracle::new(&g).unwrap();
        for a in g.nodes() {
            let d = g.distances_from(a).unwrap();
            for b in g.nodes().filter(|&b| b != a) {
                assert!(o.get(a, b) < d[b.0].unwrap());
            }
        }
    }
}

#[test]
fn nearest_leaders_on_each_side_shield_the_rest() {
    for n in 5..16usize {
        let g = path::<f64>(n).unwrap();
        for a in 0..n {
            for b in a + 2..n {
                for c in b + 1..n {
                    for i in a + 1..b {
                        let three =
                            resistance_to_set(&g, NodeId(i), &LeaderSet::new([a, b, c]).unwrap())
                                .unwrap();
                        let two =
                            resistance_to_set(&g, NodeId(i), &LeaderSet::new([a, b]).unwrap())
                                .unwrap();
                        assert_eq!(three, two, "n={n} a={a} b={b} c={c} i={i}");
                    }
                }
            }
        }
    }
}
