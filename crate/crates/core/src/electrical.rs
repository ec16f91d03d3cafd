//! Effective resistances: single pairs, node-to-set, the augmented graph
//! used for noise-corrupted leaders, and the closed-form update after an
//! edge is added.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::coherence::{LeaderSet, StubbornnessMap};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::linalg::{SparseLdlt, SymmetricSparse};
use crate::scalar::Scalar;

/// Laplacian restricted to the nodes that are not grounded, with an optional
/// per-node diagonal shift. `index[v]` maps an original node to its row.
pub(crate) struct Reduced<T> {
    pub matrix: SymmetricSparse<T>,
    pub index: Vec<Option<usize>>,
    pub kept: Vec<NodeId>,
}

pub(crate) fn reduced_laplacian<T: Scalar>(
    g: &Graph<T>,
    grounded: &[bool],
    shift: Option<&[T]>,
) -> Reduced<T> {
    let n = g.node_count();
    let mut index = vec![None; n];
    let mut kept = Vec::new();
    for v in 0..n {
        if !grounded[v] {
            index[v] = Some(kept.len());
            kept.push(NodeId(v));
        }
    }
    let mut matrix = SymmetricSparse::new(kept.len());
    for (row, &v) in kept.iter().enumerate() {
        matrix.add_diagonal(row, g.degree(v));
        if let Some(shift) = shift {
            matrix.add_diagonal(row, shift[v.0]);
        }
    }
    for e in g.edges() {
        if let (Some(a), Some(b)) = (index[e.u.0], index[e.v.0]) {
            matrix.add_off_diagonal(a, b, -e.weight);
        }
    }
    Reduced {
        matrix,
        index,
        kept,
    }
}

fn check_pair<T: Scalar>(g: &Graph<T>, i: NodeId, j: NodeId) -> Result<()> {
    g.check_node(i)?;
    g.check_node(j)?;
    if i == j {
        return Err(Error::SameNode(i.0));
    }
    Ok(())
}

/// `r(i, j)` as the `(i, i)` entry of the inverse of the Laplacian with row
/// and column `j` deleted.
pub fn resistance<T: Scalar>(g: &Graph<T>, i: NodeId, j: NodeId) -> Result<T> {
    check_pair(g, i, j)?;
    g.require_connected()?;
    let mut grounded = vec![false; g.node_count()];
    grounded[j.0] = true;
    let reduced = reduced_laplacian(g, &grounded, None);
    let row = reduced.index[i.0].expect("i is not grounded");
    let factor = reduced.matrix.factor()?;
    Ok(factor.inverse_column(row)[row])
}

/// `r(i, S)`: the `(i, i)` entry of the inverse grounded Laplacian `L_ff`.
pub fn resistance_to_set<T: Scalar>(g: &Graph<T>, i: NodeId, leaders: &LeaderSet) -> Result<T> {
    g.check_node(i)?;
    leaders.validate_for(g)?;
    if leaders.contains(i) {
        return Err(Error::LeaderQueried(i.0));
    }
    g.require_connected()?;
    let reduced = reduced_laplacian(g, &leaders.mask(g.node_count()), None);
    let row = reduced.index[i.0].expect("followers are kept");
    let factor = reduced.matrix.factor()?;
    Ok(factor.inverse_column(row)[row])
}

/// Resistance from `u` to the ends of a path segment, `d_ux ∥ (d_xy - d_ux)`.
pub fn path_two_point_resistance<T: Scalar>(d_ux: T, d_xy: T) -> Result<T> {
    if !(d_ux > T::zero() && d_ux < d_xy) {
        return Err(Error::OutOfRange(format!(
            "need 0 < d_ux < d_xy, got d_ux = {d_ux}, d_xy = {d_xy}"
        )));
    }
    Ok(d_ux - d_ux * d_ux / d_xy)
}

/// The graph with one extra node tied to every leader by an edge of weight
/// equal to the leader's stubbornness.
#[derive(Clone, Debug)]
pub struct AugmentedGraph<T> {
    pub graph: Graph<T>,
    pub s_bar: NodeId,
    pub attachment: BTreeMap<NodeId, T>,
}

pub fn augment_graph<T: Scalar>(
    g: &Graph<T>,
    leaders: &LeaderSet,
    kappa: &StubbornnessMap<T>,
) -> Result<AugmentedGraph<T>> {
    leaders.validate_for(g)?;
    let n = g.node_count();
    let attachment: BTreeMap<NodeId, T> = leaders.iter().map(|s| (s, kappa.get(s))).collect();
    let edges = g
        .edges()
        .iter()
        .map(|e| (e.u.0, e.v.0, e.weight))
        .chain(attachment.iter().map(|(&s, &k)| (s.0, n, k)));
    Ok(AugmentedGraph {
        graph: Graph::with_nodes(n + 1, edges)?,
        s_bar: NodeId(n),
        attachment,
    })
}

/// All-pairs effective resistances of a connected graph.
///
/// Built from one factorization of the Laplacian grounded at node 0 and one
/// solve per node; `r(a, b) = G_aa + G_bb - 2 G_ab` for that generalized
/// inverse `G`.
#[derive(Clone, Debug)]
pub struct ResistanceOracle<T> {
    graph: Graph<T>,
    table: Vec<T>,
}

impl<T: Scalar> ResistanceOracle<T> {
    pub fn new(g: &Graph<T>) -> Result<Self> {
        g.require_connected()?;
        let n = g.node_count();
        let mut grounded = vec![false; n];
        grounded[0] = true;
        let reduced = reduced_laplacian(g, &grounded, None);
        let factor = reduced.matrix.factor()?;
        let m = n - 1;
        let columns: Vec<Vec<T>> = (0..m)
            .into_par_iter()
            .map(|c| factor.inverse_column(c))
            .collect();
        // node v > 0 sits at reduced row v - 1
        let g_entry = |a: usize, b: usize| -> T {
            if a == 0 || b == 0 {
                T::zero()
            } else {
                columns[b - 1][a - 1]
            }
        };
        let mut table = vec![T::zero(); n * n];
        for a in 0..n {
            for b in 0..a {
                let r = g_entry(a, a) + g_entry(b, b) - g_entry(a, b) - g_entry(b, a);
                table[a * n + b] = r;
                table[b * n + a] = r;
            }
        }
        Ok(ResistanceOracle {
            graph: g.clone(),
            table,
        })
    }

    pub fn graph(&self) -> &Graph<T> {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn get(&self, i: NodeId, j: NodeId) -> T {
        self.table[i.0 * self.node_count() + j.0]
    }

    /// `Σ_u r(u, v)`.
    pub fn total_resistance_from(&self, v: NodeId) -> T {
        let n = self.node_count();
        self.table[v.0 * n..(v.0 + 1) * n]
            .iter()
            .fold(T::zero(), |acc, &r| acc + r)
    }

    /// `r(u, {x, y})` through the rank-2 Schur identity on the inverse
    /// grounded at `x`.
    pub fn two_leader_resistance(&self, u: NodeId, x: NodeId, y: NodeId) -> T {
        let two = T::from_i64(2);
        let a_uu = self.get(u, x);
        let a_yy = self.get(y, x);
        let a_uy = (a_uu + a_yy - self.get(u, y)) / two;
        a_uu - a_uy * a_uy / a_yy
    }

    /// `R_NF({x, y})` in O(n).
    pub fn two_leader_coherence(&self, x: NodeId, y: NodeId) -> Result<T> {
        if x == y {
            return Err(Error::SameNode(x.0));
        }
        let n = self.node_count();
        let sum = (0..n)
            .filter(|&u| u != x.0 && u != y.0)
            .fold(T::zero(), |acc, u| {
                acc + self.two_leader_resistance(NodeId(u), x, y)
            });
        Ok(sum / T::from_i64(2))
    }

    /// `r(u, S)` for every node, via the Schur complement of the inverse
    /// grounded at the first leader. Leaders get zero.
    pub fn set_resistances(&self, leaders: &LeaderSet) -> Result<Vec<T>> {
        leaders.validate_for(&self.graph)?;
        let two = T::from_i64(2);
        let members: Vec<NodeId> = leaders.iter().collect();
        let anchor = members[0];
        let rest = &members[1..];
        // A_ab = (r(a, anchor) + r(b, anchor) - r(a, b)) / 2
        let a = |p: NodeId, q: NodeId| {
            (self.get(p, anchor) + self.get(q, anchor) - self.get(p, q)) / two
        };
        let schur = if rest.is_empty() {
            None
        } else {
            let mut block = SymmetricSparse::new(rest.len());
            for (i, &p) in rest.iter().enumerate() {
                block.add_diagonal(i, a(p, p));
                for (j, &q) in rest.iter().enumerate().take(i) {
                    block.add_off_diagonal(i, j, a(p, q));
                }
            }
            Some(block.factor()?)
        };
        Ok(self
            .graph
            .nodes()
            .map(|u| {
                if leaders.contains(u) {
                    return T::zero();
                }
                let base = self.get(u, anchor);
                match &schur {
                    None => base,
                    Some(f) => {
                        let coupling: Vec<T> = rest.iter().map(|&p| a(u, p)).collect();
                        let solved = f.solve(&coupling);
                        coupling
                            .iter()
                            .zip(&solved)
                            .fold(base, |acc, (&c, &s)| acc - c * s)
                    }
                }
            })
            .collect())
    }

    /// Resistance between `p` and `q` after adding an edge `(i, j)` of
    /// weight `w`; an existing edge is treated as a parallel resistor.
    pub fn updated_resistance(
        &self,
        i: NodeId,
        j: NodeId,
        w: T,
        p: NodeId,
        q: NodeId,
    ) -> Result<T> {
        check_pair(&self.graph, i, j)?;
        self.graph.check_node(p)?;
        self.graph.check_node(q)?;
        if !(w > T::zero()) {
            return Err(Error::BadWeight {
                u: i.0,
                v: j.0,
                weight: w.to_string(),
            });
        }
        Ok(self.updated_entry(i, j, w, p, q))
    }

    fn updated_entry(&self, i: NodeId, j: NodeId, w: T, p: NodeId, q: NodeId) -> T {
        let delta = self.get(p, i) + self.get(q, j) - self.get(p, j) - self.get(q, i);
        let denom = T::from_i64(4) * (T::one() + w * self.get(i, j));
        self.get(p, q) - w * delta * delta / denom
    }

    /// The oracle for the graph with edge `(i, j, w)` added, updated in
    /// O(n²) without refactoring.
    pub fn with_edge_added(&self, i: NodeId, j: NodeId, w: T) -> Result<Self> {
        self.updated_resistance(i, j, w, i, j)?;
        let n = self.node_count();
        let mut table = vec![T::zero(); n * n];
        for p in 0..n {
            for q in 0..p {
                let r = self.updated_entry(i, j, w, NodeId(p), NodeId(q));
                table[p * n + q] = r;
                table[q * n + p] = r;
            }
        }
        Ok(ResistanceOracle {
            graph: self.graph.with_edge_added(i, j, w)?,
            table,
        })
    }
}

/// Builds the oracle for `g`.
pub fn resistance_oracle<T: Scalar>(g: &Graph<T>) -> Result<ResistanceOracle<T>> {
    ResistanceOracle::new(g)
}

/// `r'(p, q)` in `G + (i, j)`.
pub fn edge_addition_update<T: Scalar>(
    oracle: &ResistanceOracle<T>,
    i: NodeId,
    j: NodeId,
    w: T,
    p: NodeId,
    q: NodeId,
) -> Result<T> {
    oracle.updated_resistance(i, j, w, p, q)
}

pub(crate) fn factor_grounded<T: Scalar>(
    g: &Graph<T>,
    grounded: &[bool],
    shift: Option<&[T]>,
) -> Result<(Reduced<T>, SparseLdlt<T>)> {
    let reduced = reduced_laplacian(g, grounded, shift);
    let factor = reduced.matrix.clone().factor()?;
    Ok((reduced, factor))
}
