//! Growing a perfect binary tree one leaf at a time while keeping the two
//! designated noise-free leaders in place, and the trajectory experiment
//! built on it.

use rayon::prelude::*;
use serde::Serialize;

use crate::coherence::{coherence_nf, Dynamics, LeaderSet, Method, StubbornnessMap};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::scalar::Scalar;
use crate::selection::{brute_force_select, SearchOptions};

/// A binary tree whose levels up to `height` are full and whose level
/// `height + 1` is partially filled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowingTree {
    parent: Vec<Option<NodeId>>,
    children: Vec<[Option<NodeId>; 2]>,
    level: Vec<u32>,
    /// Left-to-right index of a node within its level.
    pos: Vec<u64>,
    /// Nodes of each level, sorted by position.
    levels: Vec<Vec<NodeId>>,
    height: u32,
    leaders: (NodeId, NodeId),
}

/// Where a grow step put its node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Placement {
    pub node: NodeId,
    pub parent: NodeId,
    /// 0 for a left child, 1 for a right child.
    pub side: u8,
}

impl GrowingTree {
    /// Perfect binary tree of height `h0` in breadth-first labelling, with
    /// leaders at the leftmost level-2 node of each root subtree (nodes 3
    /// and 5).
    pub fn new(h0: u32) -> Result<Self> {
        if h0 < 4 {
            return Err(Error::HeightTooSmall(h0));
        }
        let n = (1usize << (h0 + 1)) - 1;
        let mut t = GrowingTree {
            parent: Vec::with_capacity(n),
            children: Vec::with_capacity(n),
            level: Vec::with_capacity(n),
            pos: Vec::with_capacity(n),
            levels: vec![Vec::new(); h0 as usize + 2],
            height: h0,
            leaders: (NodeId(3), NodeId(5)),
        };
        t.push_node(None, 0, 0);
        for v in 1..n {
            let p = NodeId((v - 1) / 2);
            t.attach(p, ((v - 1) % 2) as u8);
        }
        Ok(t)
    }

    fn push_node(&mut self, parent: Option<NodeId>, level: u32, pos: u64) -> NodeId {
        let id = NodeId(self.parent.len());
        self.parent.push(parent);
        self.children.push([None, None]);
        self.level.push(level);
        self.pos.push(pos);
        if self.levels.len() <= level as usize {
            self.levels.resize(level as usize + 1, Vec::new());
        }
        let row = &mut self.levels[level as usize];
        let at = row.partition_point(|&u| self.pos[u.0] < pos);
        row.insert(at, id);
        id
    }

    fn attach(&mut self, parent: NodeId, side: u8) -> NodeId {
        let level = self.level[parent.0] + 1;
        let pos = 2 * self.pos[parent.0] + side as u64;
        let id = self.push_node(Some(parent), level, pos);
        self.children[parent.0][side as usize] = Some(id);
        id
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    /// Height of the deepest full level.
    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn leaders(&self) -> (NodeId, NodeId) {
        self.leaders
    }

    pub fn level(&self, v: NodeId) -> u32 {
        self.level[v.0]
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.0]
    }

    pub fn children(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.children[v.0].iter().flatten().copied()
    }

    pub fn nodes_at_level(&self, level: u32) -> &[NodeId] {
        self.levels
            .get(level as usize)
            .map_or(&[], |r| r.as_slice())
    }

    /// Whether `v` lies in the subtree rooted at `root`.
    pub fn in_subtree(&self, v: NodeId, root: NodeId) -> bool {
        let (lv, lr) = (self.level[v.0], self.level[root.0]);
        lv >= lr && self.pos[v.0] >> (lv - lr) == self.pos[root.0]
    }

    pub fn hops(&self, a: NodeId, b: NodeId) -> u32 {
        let (mut a, mut b) = (a, b);
        let mut d = 0;
        while a != b {
            if self.level[a.0] >= self.level[b.0] {
                a = self.parent[a.0].expect("non-root has a parent");
            } else {
                b = self.parent[b.0].expect("non-root has a parent");
            }
            d += 1;
        }
        d
    }

    /// Unit-weight graph of the current tree.
    pub fn graph<T: Scalar>(&self) -> Graph<T> {
        let edges = self
            .parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| (p.0, v, T::one())));
        Graph::with_nodes(self.node_count(), edges).expect("a tree is a valid graph")
    }

    /// Leftmost free slot on the growing level inside `root`'s subtree.
    fn free_slot_under(&self, root: Option<NodeId>) -> Option<(NodeId, u8)> {
        self.nodes_at_level(self.height)
            .iter()
            .filter(|&&u| root.is_none_or(|r| self.in_subtree(u, r)))
            .find_map(|&u| {
                self.children[u.0]
                    .iter()
                    .position(Option::is_none)
                    .map(|side| (u, side as u8))
            })
    }

    fn growing_count_under(&self, root: NodeId) -> usize {
        self.nodes_at_level(self.height + 1)
            .iter()
            .filter(|&&u| self.in_subtree(u, root))
            .count()
    }

    /// Slot under the child subtree of `leader` with fewer nodes on the
    /// growing level (left on ties), if either has room.
    fn slot_near(&self, leader: NodeId) -> Option<(NodeId, u8)> {
        let kids: Vec<NodeId> = self.children(leader).collect();
        let mut order: Vec<(usize, usize, NodeId)> = kids
            .iter()
            .enumerate()
            .map(|(i, &c)| (self.growing_count_under(c), i, c))
            .collect();
        order.sort();
        order
            .into_iter()
            .find_map(|(_, _, c)| self.free_slot_under(Some(c)))
    }

    /// Adds one leaf: near `x̂` first, then near `ŷ`, then anywhere, always
    /// in the leftmost qualifying slot.
    pub fn grow_step(&mut self) -> Placement {
        let (x, y) = self.leaders;
        let (parent, side) = self
            .slot_near(x)
            .or_else(|| self.slot_near(y))
            .or_else(|| self.free_slot_under(None))
            .expect("the growing level has a free slot");
        let node = self.attach(parent, side);
        if self.nodes_at_level(self.height + 1).len() as u64 == 1u64 << (self.height + 1) {
            self.height += 1;
        }
        Placement { node, parent, side }
    }
}

/// One pair's coherence at one step of the trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub step: usize,
    /// `"x-y"` with `x < y`.
    pub pair_id: String,
    pub d_xr: u32,
    pub d_yr: u32,
    pub d_xy: u32,
    pub r_nf: f64,
}

/// Per-step comparison of the designated pair against the others.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepSummary {
    pub step: usize,
    pub node_count: usize,
    pub height: u32,
    pub designated: f64,
    /// Smallest value over the other compared pairs.
    pub best_other: f64,
    pub best_other_pair: String,
    /// Global two-leader optimum, when requested.
    pub global_optimum: Option<f64>,
}

impl StepSummary {
    pub fn designated_is_strict_min(&self) -> bool {
        self.designated < self.best_other
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub steps: Vec<StepSummary>,
    pub final_node_count: usize,
    pub final_height: u32,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,pair_id,d_xr,d_yr,d_xy,r_nf\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.step, r.pair_id, r.d_xr, r.d_yr, r.d_xy, r.r_nf
            ));
        }
        out
    }
}

fn pair_id(a: NodeId, b: NodeId) -> String {
    format!("{}-{}", a.0.min(b.0), a.0.max(b.0))
}

/// Grows from a perfect tree of height `h0` for `steps` steps and records,
/// before the first step and after each one, the noise-free coherence of
/// every pair of nodes at depth at most 3.
pub fn growth_trajectory<T: Scalar>(
    h0: u32,
    steps: usize,
    with_global: bool,
) -> Result<Trajectory> {
    let mut tree = GrowingTree::new(h0)?;
    let shallow: Vec<NodeId> = (0..=3)
        .flat_map(|l| tree.nodes_at_level(l).to_vec())
        .collect();
    let pairs: Vec<(NodeId, NodeId)> = shallow
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| shallow[i + 1..].iter().map(move |&b| (a, b)))
        .collect();
    let designated = pair_id(tree.leaders.0, tree.leaders.1);
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for step in 0..=steps {
        if step > 0 {
            tree.grow_step();
        }
        let g = tree.graph::<T>();
        let values: Vec<Result<f64>> = pairs
            .par_iter()
            .map(|&(a, b)| {
                let s = LeaderSet::new([a.0, b.0])?;
                Ok(coherence_nf(&g, &s, Method::Trace)?.value.to_f64())
            })
            .collect();
        let mut best_other = (f64::INFINITY, String::new());
        let mut mine = f64::NAN;
        for (&(a, b), v) in pairs.iter().zip(values) {
            let v = v?;
            let id = pair_id(a, b);
            if id == designated {
                mine = v;
            } else if v < best_other.0 {
                best_other = (v, id.clone());
            }
            rows.push(TrajectoryRow {
                step,
                pair_id: id,
                d_xr: tree.level(a),
                d_yr: tree.level(b),
                d_xy: tree.hops(a, b),
                r_nf: v,
            });
        }
        let global_optimum = if with_global {
            let found = brute_force_select(
                &g,
                2,
                Dynamics::NoiseFree,
                &StubbornnessMap::default(),
                &SearchOptions::default(),
            )?;
            Some(found.value.to_f64())
        } else {
            None
        };
        summaries.push(StepSummary {
            step,
            node_count: tree.node_count(),
            height: tree.height(),
            designated: mine,
            best_other: best_other.0,
            best_other_pair: best_other.1,
            global_optimum,
        });
    }
    Ok(Trajectory {
        rows,
        steps: summaries,
        final_node_count: tree.node_count(),
        final_height: tree.height(),
    })
}
