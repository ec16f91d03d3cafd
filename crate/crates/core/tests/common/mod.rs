//! Dense reference computations shared by the integration tests. Nothing
//! here calls into the crate's factorizations or resistance code.

#![allow(dead_code)]

use coherence_core::{Graph, Scalar};
use proptest::prelude::*;
use rand::Rng;

pub type Edges<T> = Vec<(usize, usize, T)>;

pub fn dense_laplacian<T: Scalar>(n: usize, edges: &[(usize, usize, T)]) -> Vec<Vec<T>> {
    let mut l = vec![vec![T::zero(); n]; n];
    for &(u, v, w) in edges {
        l[u][u] = l[u][u] + w;
        l[v][v] = l[v][v] + w;
        l[u][v] = l[u][v] - w;
        l[v][u] = l[v][u] - w;
    }
    l
}

/// Gauss–Jordan inverse with partial pivoting; panics on a singular matrix.
pub fn inverse<T: Scalar>(mut a: Vec<Vec<T>>) -> Vec<Vec<T>> {
    let n = a.len();
    let mut inv: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        assert!(a[pivot][col] != T::zero(), "singular matrix");
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] = a[col][j] / p;
            inv[col][j] = inv[col][j] / p;
        }
        for i in 0..n {
            if i != col && a[i][col] != T::zero() {
                let f = a[i][col];
                for j in 0..n {
                    a[i][j] = a[i][j] - f * a[col][j];
                    inv[i][j] = inv[i][j] - f * inv[col][j];
                }
            }
        }
    }
    inv
}

fn half_trace<T: Scalar>(m: &[Vec<T>]) -> T {
    (0..m.len()).fold(T::zero(), |acc, i| acc + m[i][i]) / T::from_i64(2)
}

/// `½ tr(L_ff⁻¹)`.
pub fn nf_oracle<T: Scalar>(n: usize, edges: &[(usize, usize, T)], leaders: &[usize]) -> T {
    let l = dense_laplacian(n, edges);
    let keep: Vec<usize> = (0..n).filter(|v| !leaders.contains(v)).collect();
    if keep.is_empty() {
        return T::zero();
    }
    let sub: Vec<Vec<T>> = keep
        .iter()
        .map(|&i| keep.iter().map(|&j| l[i][j]).collect())
        .collect();
    half_trace(&inverse(sub))
}

/// `½ tr((L + diag(κ on leaders))⁻¹)`.
pub fn nc_oracle<T: Scalar>(
    n: usize,
    edges: &[(usize, usize, T)],
    leaders: &[usize],
    kappa: &[T],
) -> T {
    let mut l = dense_laplacian(n, edges);
    for (&s, &k) in leaders.iter().zip(kappa) {
        l[s][s] = l[s][s] + k;
    }
    half_trace(&inverse(l))
}

/// `(e_a - e_b)ᵀ (L + 11ᵀ/n)⁻¹ (e_a - e_b)`.
pub fn resistance_oracle<T: Scalar>(
    n: usize,
    edges: &[(usize, usize, T)],
    a: usize,
    b: usize,
) -> T {
    let inv = all_pairs_inverse(n, edges);
    inv[a][a] + inv[b][b] - inv[a][b] - inv[b][a]
}

pub fn all_pairs_inverse<T: Scalar>(n: usize, edges: &[(usize, usize, T)]) -> Vec<Vec<T>> {
    let mut l = dense_laplacian(n, edges);
    let j = T::one() / T::from_usize(n);
    for row in l.iter_mut() {
        for x in row.iter_mut() {
            *x = *x + j;
        }
    }
    inverse(l)
}

/// Resistance from `u` to a set, by shorting the set into a single node.
pub fn set_resistance_oracle<T: Scalar>(
    n: usize,
    edges: &[(usize, usize, T)],
    u: usize,
    set: &[usize],
) -> T {
    if set.contains(&u) {
        return T::zero();
    }
    // relabel: set members collapse onto node 0, others shift up
    let mut label = vec![0usize; n];
    let mut next = 1;
    for (v, slot) in label.iter_mut().enumerate() {
        if !set.contains(&v) {
            *slot = next;
            next += 1;
        }
    }
    let mut merged: Vec<(usize, usize, T)> = Vec::new();
    for &(a, b, w) in edges {
        let (x, y) = (label[a], label[b]);
        if x != y {
            merged.push((x, y, w));
        }
    }
    resistance_oracle(next, &merged, label[u], 0)
}

pub fn graph_of<T: Scalar>(n: usize, edges: &[(usize, usize, T)]) -> Graph<T> {
    Graph::with_nodes(n, edges.iter().copied()).expect("valid test graph")
}

/// Random connected graph: a random spanning tree plus extra edges, each
/// pair present with probability `p`, weights uniform in `[lo, hi)`.
pub fn random_connected<R: Rng>(rng: &mut R, n: usize, p: f64, lo: f64, hi: f64) -> Edges<f64> {
    let mut edges = Vec::new();
    let mut present = std::collections::HashSet::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.push((u, v, rng.random_range(lo..hi)));
        present.insert((u, v));
    }
    for v in 0..n {
        for u in 0..v {
            if !present.contains(&(u, v)) && rng.random_bool(p) {
                edges.push((u, v, rng.random_range(lo..hi)));
            }
        }
    }
    edges
}

/// Strategy for connected weighted graphs with `2..=max_n` nodes.
pub fn connected_graph(max_n: usize) -> impl Strategy<Value = (usize, Edges<f64>)> {
    (2..=max_n).prop_flat_map(|n| {
        let tree = proptest::collection::vec((any::<prop::sample::Index>(), 0.1f64..10.0), n - 1);
        let extra = proptest::collection::vec(
            (
                any::<prop::sample::Index>(),
                any::<prop::sample::Index>(),
                0.1f64..10.0,
            ),
            0..2 * n,
        );
        (Just(n), tree, extra).prop_map(|(n, tree, extra)| {
            let mut seen = std::collections::HashSet::new();
            let mut edges = Vec::new();
            for (v, (p, w)) in (1..n).zip(tree) {
                let u = p.index(v);
                seen.insert((u, v));
                edges.push((u, v, w));
            }
            for (a, b, w) in extra {
                let (a, b) = (a.index(n), b.index(n));
                let key = (a.min(b), a.max(b));
                if a != b && seen.insert(key) {
                    edges.push((key.0, key.1, w));
                }
            }
            (n, edges)
        })
    })
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}
