//! Weighted undirected graphs and the generators for cycles, paths and
//! perfect M-ary trees.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Index of a node, 0-based and contiguous.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for NodeId {
    fn from(v: usize) -> Self {
        NodeId(v)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge<T> {
    pub u: NodeId,
    pub v: NodeId,
    pub weight: T,
}

/// Immutable weighted undirected graph with strictly positive weights, no
/// self-loops and at most one edge per unordered pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph<T> {
    edges: Vec<Edge<T>>,
    adjacency: Vec<Vec<(NodeId, T)>>,
}

impl<T: Scalar> Graph<T> {
    /// Builds a graph whose node count is one more than the largest id used.
    pub fn from_edges<I>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let edges: Vec<_> = edges.into_iter().collect();
        let n = edges
            .iter()
            .map(|&(u, v, _)| u.max(v) + 1)
            .max()
            .ok_or(Error::EmptyGraph)?;
        Self::with_nodes(n, edges)
    }

    /// Builds a graph on exactly `node_count` nodes; unreferenced ids are
    /// isolated nodes.
    pub fn with_nodes<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        if node_count == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut seen = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); node_count];
        let mut list = Vec::new();
        for (u, v, w) in edges {
            for node in [u, v] {
                if node >= node_count {
                    return Err(Error::NodeOutOfRange { node, node_count });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if !(w > T::zero()) || !w.to_f64().is_finite() {
                return Err(Error::BadWeight {
                    u,
                    v,
                    weight: w.to_string(),
                });
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::DuplicateEdge { u, v });
            }
            adjacency[u].push((NodeId(v), w));
            adjacency[v].push((NodeId(u), w));
            list.push(Edge {
                u: NodeId(u),
                v: NodeId(v),
                weight: w,
            });
        }
        for nbrs in &mut adjacency {
            nbrs.sort_by_key(|&(j, _)| j);
        }
        Ok(Graph {
            edges: list,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId)
    }

    /// Neighbours of `u`, sorted by id.
    pub fn neighbors(&self, u: NodeId) -> &[(NodeId, T)] {
        &self.adjacency[u.0]
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> Option<T> {
        let nbrs = &self.adjacency[u.0];
        nbrs.binary_search_by_key(&v, |&(j, _)| j)
            .ok()
            .map(|pos| nbrs[pos].1)
    }

    /// Weighted degree `d_ii = Σ_j w_ij`.
    pub fn degree(&self, u: NodeId) -> T {
        self.adjacency[u.0]
            .iter()
            .fold(T::zero(), |acc, &(_, w)| acc + w)
    }

    pub fn check_node(&self, u: NodeId) -> Result<()> {
        if u.0 < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node: u.0,
                node_count: self.node_count(),
            })
        }
    }

    /// Returns a copy with the edge `(u, v, w)` added; an existing edge gets
    /// `w` added to its weight (parallel conductances).
    pub fn with_edge_added(&self, u: NodeId, v: NodeId, w: T) -> Result<Self> {
        self.check_node(u)?;
        self.check_node(v)?;
        let mut merged = false;
        let mut edges: Vec<_> = self
            .edges
            .iter()
            .map(|e| {
                if (e.u, e.v) == (u, v) || (e.u, e.v) == (v, u) {
                    merged = true;
                    (e.u.0, e.v.0, e.weight + w)
                } else {
                    (e.u.0, e.v.0, e.weight)
                }
            })
            .collect();
        if !merged {
            edges.push((u.0, v.0, w));
        }
        Self::with_nodes(self.node_count(), edges)
    }

    /// Dense weighted Laplacian `L = D - W`.
    pub fn laplacian(&self) -> DenseMatrix<T> {
        let n = self.node_count();
        let mut l = DenseMatrix::zeros(n, n);
        for e in &self.edges {
            let (u, v, w) = (e.u.0, e.v.0, e.weight);
            l[(u, u)] = l[(u, u)] + w;
            l[(v, v)] = l[(v, v)] + w;
            l[(u, v)] = l[(u, v)] - w;
            l[(v, u)] = l[(v, u)] - w;
        }
        l
    }

    /// Component label per node, labels assigned in order of first node.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.adjacency[u] {
                    if label[v.0] == usize::MAX {
                        label[v.0] = next;
                        queue.push_back(v.0);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    pub fn require_connected(&self) -> Result<()> {
        if self.is_connected() {
            Ok(())
        } else {
            Err(Error::Disconnected)
        }
    }

    /// Shortest-path distances from `source` (label-setting search).
    /// Unreachable nodes get `None`.
    pub fn distances_from(&self, source: NodeId) -> Result<Vec<Option<T>>> {
        self.check_node(source)?;
        let mut dist: Vec<Option<T>> = vec![None; self.node_count()];
        let mut done = vec![false; self.node_count()];
        let mut heap = BinaryHeap::new();
        dist[source.0] = Some(T::zero());
        heap.push(Frontier {
            dist: T::zero(),
            node: source.0,
        });
        while let Some(Frontier { dist: d, node: u }) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for &(v, w) in &self.adjacency[u] {
                let cand = d + w;
                if dist[v.0].is_none_or(|cur| cand < cur) {
                    dist[v.0] = Some(cand);
                    heap.push(Frontier {
                        dist: cand,
                        node: v.0,
                    });
                }
            }
        }
        Ok(dist)
    }

    /// Weight of the shortest path between `u` and `v`.
    pub fn graph_distance(&self, u: NodeId, v: NodeId) -> Result<T> {
        self.check_node(v)?;
        self.distances_from(u)?[v.0].ok_or(Error::Unreachable(u.0, v.0))
    }
}

struct Frontier<T> {
    dist: T,
    node: usize,
}

impl<T: PartialOrd> PartialEq for Frontier<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: PartialOrd> Eq for Frontier<T> {}

impl<T: PartialOrd> PartialOrd for Frontier<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: PartialOrd> Ord for Frontier<T> {
    // min-heap on distance, then node id
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Unit-weight cycle `0 - 1 - ... - (n-1) - 0`.
pub fn cycle<T: Scalar>(n: usize) -> Result<Graph<T>> {
    if n < 3 {
        return Err(Error::BadParameter(format!("cycle needs n >= 3, got {n}")));
    }
    Graph::with_nodes(n, (0..n).map(|u| (u, (u + 1) % n, T::one())))
}

/// Unit-weight path `0 - 1 - ... - (n-1)`.
pub fn path<T: Scalar>(n: usize) -> Result<Graph<T>> {
    if n < 2 {
        return Err(Error::BadParameter(format!("path needs n >= 2, got {n}")));
    }
    Graph::with_nodes(n, (1..n).map(|u| (u - 1, u, T::one())))
}

/// A perfect M-ary tree in breadth-first labelling: the root is node 0 and
/// the children of `v` are `M*v + 1 ..= M*v + M`.
#[derive(Clone, Debug)]
pub struct PerfectTree<T> {
    pub graph: Graph<T>,
    pub arity: usize,
    pub height: u32,
    pub parent: Vec<Option<NodeId>>,
    pub level: Vec<u32>,
}

impl<T: Scalar> PerfectTree<T> {
    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn children(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let first = self.arity * v.0 + 1;
        (first..first + self.arity)
            .filter(|&c| c < self.level.len())
            .map(NodeId)
    }

    /// The child of the root whose subtree contains `v`; `None` for the root.
    pub fn root_branch(&self, v: NodeId) -> Option<NodeId> {
        let mut cur = v;
        while let Some(p) = self.parent[cur.0] {
            if p.0 == 0 {
                return Some(cur);
            }
            cur = p;
        }
        None
    }

    pub fn lowest_common_ancestor(&self, a: NodeId, b: NodeId) -> NodeId {
        let (mut a, mut b) = (a, b);
        while self.level[a.0] > self.level[b.0] {
            a = self.parent[a.0].expect("non-root has a parent");
        }
        while self.level[b.0] > self.level[a.0] {
            b = self.parent[b.0].expect("non-root has a parent");
        }
        while a != b {
            a = self.parent[a.0].expect("non-root has a parent");
            b = self.parent[b.0].expect("non-root has a parent");
        }
        a
    }

    /// Hop distance between two nodes.
    pub fn hops(&self, a: NodeId, b: NodeId) -> u32 {
        let lca = self.lowest_common_ancestor(a, b);
        self.level[a.0] + self.level[b.0] - 2 * self.level[lca.0]
    }
}

/// Number of nodes in a perfect M-ary tree of height `h`.
pub fn perfect_tree_size(arity: usize, height: u32) -> Option<usize> {
    let mut total: usize = 0;
    let mut layer: usize = 1;
    for _ in 0..=height {
        total = total.checked_add(layer)?;
        layer = layer.checked_mul(arity)?;
    }
    Some(total)
}

/// Unit-weight perfect M-ary tree of height `h` (root at level 0).
pub fn perfect_tree<T: Scalar>(arity: usize, height: u32) -> Result<PerfectTree<T>> {
    if arity < 2 {
        return Err(Error::BadParameter(format!(
            "tree arity must be >= 2, got {arity}"
        )));
    }
    let n = perfect_tree_size(arity, height)
        .filter(|&n| n <= 50_000_000)
        .ok_or_else(|| Error::BadParameter(format!("tree {arity}:{height} is too large")))?;
    let mut parent = vec![None; n];
    let mut level = vec![0u32; n];
    for v in 1..n {
        let p = (v - 1) / arity;
        parent[v] = Some(NodeId(p));
        level[v] = level[p] + 1;
    }
    let graph = Graph::with_nodes(n, (1..n).map(|v| ((v - 1) / arity, v, T::one())))?;
    Ok(PerfectTree {
        graph,
        arity,
        height,
        parent,
        level,
    })
}
