//! Closed-form coherence and optimal placements for unit-weight cycles,
//! paths and perfect M-ary trees, plus two noise-corrupted leaders on a
//! cycle.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::coherence::Dynamics;
use crate::coherence::{coherence_nc, LeaderSet, Method, StubbornnessMap};
use crate::error::{Error, Result};
use crate::graph::{cycle, NodeId, PerfectTree};
use crate::scalar::Scalar;
use crate::selection::{brute_force_select, SearchOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapContext {
    /// `k` gaps summing to `n`, all at least 1.
    Cycle,
    /// `k + 1` gaps summing to `n - 1`; the two end gaps may be 0.
    Path,
}

/// Distances between consecutive leaders on a cycle or a path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GapVector {
    gaps: Vec<u64>,
    context: GapContext,
}

impl GapVector {
    pub fn cycle(gaps: Vec<u64>) -> Result<Self> {
        if gaps.is_empty() {
            return Err(Error::BadGapVector(
                "a cycle needs at least one leader".into(),
            ));
        }
        if gaps.contains(&0) {
            return Err(Error::BadGapVector("cycle gaps must be at least 1".into()));
        }
        Ok(GapVector {
            gaps,
            context: GapContext::Cycle,
        })
    }

    pub fn path(gaps: Vec<u64>) -> Result<Self> {
        if gaps.len() < 2 {
            return Err(Error::BadGapVector(
                "a path gap vector has k + 1 >= 2 entries".into(),
            ));
        }
        if gaps[1..gaps.len() - 1].contains(&0) {
            return Err(Error::BadGapVector(
                "interior path gaps must be at least 1".into(),
            ));
        }
        Ok(GapVector {
            gaps,
            context: GapContext::Path,
        })
    }

    /// Gaps of a leader set on the `n`-cycle `0 - 1 - ... - (n-1) - 0`,
    /// starting at the smallest leader.
    pub fn from_cycle_leaders(n: u64, leaders: &LeaderSet) -> Result<Self> {
        let pos: Vec<u64> = leaders.iter().map(|v| v.0 as u64).collect();
        if pos.iter().any(|&p| p >= n) {
            return Err(Error::BadGapVector(format!("leader outside a {n}-cycle")));
        }
        let k = pos.len();
        let gaps = (0..k)
            .map(|i| {
                if i + 1 < k {
                    pos[i + 1] - pos[i]
                } else {
                    n - pos[k - 1] + pos[0]
                }
            })
            .collect();
        Self::cycle(gaps)
    }

    /// Gaps of a leader set on the `n`-path `0 - 1 - ... - (n-1)`.
    pub fn from_path_leaders(n: u64, leaders: &LeaderSet) -> Result<Self> {
        let pos: Vec<u64> = leaders.iter().map(|v| v.0 as u64).collect();
        let last = *pos.last().expect("leader sets are nonempty");
        if last >= n {
            return Err(Error::BadGapVector(format!("leader outside a {n}-path")));
        }
        let mut gaps = vec![pos[0]];
        gaps.extend(pos.windows(2).map(|w| w[1] - w[0]));
        gaps.push(n - 1 - last);
        Self::path(gaps)
    }

    pub fn gaps(&self) -> &[u64] {
        &self.gaps
    }

    pub fn context(&self) -> GapContext {
        self.context
    }

    pub fn leader_count(&self) -> usize {
        match self.context {
            GapContext::Cycle => self.gaps.len(),
            GapContext::Path => self.gaps.len() - 1,
        }
    }

    pub fn node_count(&self) -> u64 {
        let total: u64 = self.gaps.iter().sum();
        match self.context {
            GapContext::Cycle => total,
            GapContext::Path => total + 1,
        }
    }

    /// A leader set realizing the gaps; on a cycle the first leader is node 0.
    pub fn leaders(&self) -> LeaderSet {
        let start = match self.context {
            GapContext::Cycle => 0,
            GapContext::Path => self.gaps[0],
        };
        let interior = match self.context {
            GapContext::Cycle => &self.gaps[..self.gaps.len() - 1],
            GapContext::Path => &self.gaps[1..self.gaps.len() - 1],
        };
        let mut pos = vec![start];
        for &c in interior {
            pos.push(pos.last().unwrap() + c);
        }
        LeaderSet::new(pos.into_iter().map(|p| p as usize)).expect("gaps are positive")
    }

    /// Lexicographically smallest rotation (cycles only).
    pub fn canonical_rotation(&self) -> Vec<u64> {
        let k = self.gaps.len();
        (0..k)
            .map(|s| {
                self.gaps[s..]
                    .iter()
                    .chain(&self.gaps[..s])
                    .copied()
                    .collect::<Vec<_>>()
            })
            .min()
            .unwrap_or_default()
    }

    /// Gap multiset in ascending order.
    pub fn sorted(&self) -> Vec<u64> {
        let mut g = self.gaps.clone();
        g.sort_unstable();
        g
    }
}

fn int<T: Scalar>(v: u64) -> T {
    T::from_i64(v as i64)
}

/// `R_NF = (cᵀc - k) / 12` on a unit cycle.
pub fn cycle_nf_coherence<T: Scalar>(c: &GapVector) -> Result<T> {
    if c.context != GapContext::Cycle {
        return Err(Error::BadGapVector("expected cycle gaps".into()));
    }
    let sq = c
        .gaps
        .iter()
        .fold(T::zero(), |acc, &g| acc + int::<T>(g * g));
    Ok((sq - T::from_usize(c.gaps.len())) / T::from_i64(12))
}

/// Optimal noise-free placement of `k` leaders on an `n`-cycle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleOptimum<T> {
    pub n: u64,
    pub k: u64,
    /// `n = k * base + remainder`; optimal gaps are `base` or `base + 1`.
    pub base: u64,
    pub remainder: u64,
    /// Canonical representative: `k - remainder` copies of `base`, then
    /// `remainder` copies of `base + 1`.
    pub gaps: Vec<u64>,
    pub value: T,
}

pub fn cycle_nf_optimal<T: Scalar>(n: u64, k: u64) -> Result<CycleOptimum<T>> {
    if n < 3 || k == 0 || k > n {
        return Err(Error::BadParameter(format!(
            "need n >= 3 and 1 <= k <= n, got n = {n}, k = {k}"
        )));
    }
    let (base, remainder) = (n / k, n % k);
    let gaps: Vec<u64> = (0..k)
        .map(|i| if i < k - remainder { base } else { base + 1 })
        .collect();
    let value = cycle_nf_coherence(&GapVector::cycle(gaps.clone())?)?;
    Ok(CycleOptimum {
        n,
        k,
        base,
        remainder,
        gaps,
        value,
    })
}

/// Whether a gap vector lies in the optimal family for its cycle.
pub fn is_optimal_cycle_gaps(c: &GapVector) -> bool {
    let (n, k) = (c.node_count(), c.gaps.len() as u64);
    let base = n / k;
    c.context == GapContext::Cycle && c.gaps.iter().all(|&g| g == base || g == base + 1)
}

/// Noise-free coherence of a unit path from its gap vector:
/// `¼(c₁² + c_{k+1}² + c₁ + c_{k+1}) + (1/12) Σ_{interior} (c_i² - 1)`.
pub fn path_nf_coherence<T: Scalar>(c: &GapVector) -> Result<T> {
    if c.context != GapContext::Path {
        return Err(Error::BadGapVector("expected path gaps".into()));
    }
    let (first, last) = (c.gaps[0], *c.gaps.last().unwrap());
    let ends = int::<T>(first * first + last * last + first + last) / T::from_i64(4);
    let interior = c.gaps[1..c.gaps.len() - 1]
        .iter()
        .fold(T::zero(), |acc, &g| acc + int::<T>(g * g - 1));
    Ok(ends + interior / T::from_i64(12))
}

/// Optimal noise-free placement of `k` leaders on an `n`-path.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathOptimum<T> {
    pub gaps: Vec<u64>,
    pub leaders: Vec<usize>,
    pub value: T,
    /// Symmetric, equally spaced candidate from the rounding formula, when
    /// its divisibility conditions hold.
    pub rounded: Option<Vec<u64>>,
    /// Whether the rounded candidate attains the optimum.
    pub rounded_is_optimal: Option<bool>,
}

/// The symmetric, equally spaced placement
/// `c₁ = c_{k+1} = round((2(n-1) - 3(k-1)) / (6(k-1) + 4))`, interior gaps
/// `((n-1) - 2c₁)/(k-1)`, when it is an integral gap vector.
pub fn path_rounded_placement(n: u64, k: u64) -> Option<Vec<u64>> {
    if k < 2 || k > n {
        return None;
    }
    let num = 2 * (n as i64 - 1) - 3 * (k as i64 - 1);
    let den = 6 * (k as i64 - 1) + 4;
    // half away from zero
    let end = num.signum() * ((2 * num.abs() + den) / (2 * den));
    if end < 0 {
        return None;
    }
    let end = end as u64;
    let rest = (n - 1).checked_sub(2 * end)?;
    if rest % (k - 1) != 0 || rest / (k - 1) == 0 {
        return None;
    }
    let mut gaps = vec![end];
    gaps.extend(std::iter::repeat_n(rest / (k - 1), (k - 1) as usize));
    gaps.push(end);
    Some(gaps)
}

/// Exact optimum by marginal allocation: the objective is a sum of convex
/// functions of the individual gaps, so handing out the `n - k` free units
/// one at a time to the cheapest gap is optimal.
pub fn path_nf_optimal<T: Scalar>(n: u64, k: u64) -> Result<PathOptimum<T>> {
    if n < 2 || k == 0 || k > n {
        return Err(Error::BadParameter(format!(
            "need n >= 2 and 1 <= k <= n, got n = {n}, k = {k}"
        )));
    }
    let slots = (k + 1) as usize;
    let is_end = |i: usize| i == 0 || i == slots - 1;
    let mut gaps: Vec<u64> = (0..slots).map(|i| if is_end(i) { 0 } else { 1 }).collect();
    // marginal costs scaled by 12: ends 6(c + 1), interior 2c + 1
    let marginal = |i: usize, c: u64| if is_end(i) { 6 * (c + 1) } else { 2 * c + 1 };
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = (0..slots)
        .map(|i| Reverse((marginal(i, gaps[i]), i)))
        .collect();
    for _ in 0..(n - k) {
        let Reverse((_, i)) = heap.pop().expect("heap holds every slot");
        gaps[i] += 1;
        heap.push(Reverse((marginal(i, gaps[i]), i)));
    }
    let vector = GapVector::path(gaps.clone())?;
    let value: T = path_nf_coherence(&vector)?;
    let rounded = path_rounded_placement(n, k);
    let rounded_is_optimal = rounded.as_ref().map(|r| {
        let v: T = path_nf_coherence(&GapVector::path(r.clone()).expect("valid gaps"))
            .expect("path context");
        (v - value).abs() <= T::tie_window(value)
    });
    Ok(PathOptimum {
        leaders: vector.leaders().indices(),
        gaps,
        value,
        rounded,
        rounded_is_optimal,
    })
}

/// Placement of two leaders in a perfect M-ary tree whose lowest common
/// ancestor is the root: `x` at depth `d_xr`, `y` at depth `d_xy - d_xr`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TreeGeometry {
    pub arity: u32,
    pub height: u32,
    pub d_xr: u32,
    pub d_xy: u32,
}

impl TreeGeometry {
    pub fn new(arity: u32, height: u32, d_xr: u32, d_xy: u32) -> Result<Self> {
        let bad = |m: String| Err(Error::BadGeometry(m));
        if arity < 2 {
            return bad(format!("arity must be >= 2, got {arity}"));
        }
        if d_xy == 0 {
            return bad("leaders must be distinct (d_xy >= 1)".into());
        }
        if d_xr > d_xy || d_xr > height || d_xy - d_xr > height {
            return bad(format!(
                "d_xr = {d_xr}, d_xy = {d_xy} do not fit in height {height}"
            ));
        }
        Ok(TreeGeometry {
            arity,
            height,
            d_xr,
            d_xy,
        })
    }

    pub fn d_yr(&self) -> u32 {
        self.d_xy - self.d_xr
    }

    /// Same placement with the roles of `x` and `y` swapped.
    pub fn swapped(&self) -> Self {
        TreeGeometry {
            d_xr: self.d_yr(),
            ..*self
        }
    }

    /// Orientation with `d_xr <= d_yr`.
    pub fn normalized(&self) -> Self {
        if self.d_xr <= self.d_yr() {
            *self
        } else {
            self.swapped()
        }
    }

    /// Two concrete nodes with this geometry: the leftmost node at each
    /// depth, in the first and second subtrees of the root.
    pub fn realize<T: Scalar>(&self, tree: &PerfectTree<T>) -> Result<(NodeId, NodeId)> {
        if tree.arity as u32 != self.arity || tree.height != self.height {
            return Err(Error::BadGeometry(
                "geometry does not match the tree".into(),
            ));
        }
        let descend = |branch: usize, depth: u32| -> NodeId {
            if depth == 0 {
                return NodeId(0);
            }
            let mut v = branch;
            for _ in 1..depth {
                v = v * tree.arity + 1;
            }
            NodeId(v)
        };
        let (x, y) = if self.d_xr == 0 {
            (NodeId(0), descend(1, self.d_xy))
        } else if self.d_yr() == 0 {
            (descend(1, self.d_xr), NodeId(0))
        } else {
            (descend(1, self.d_xr), descend(2, self.d_yr()))
        };
        Ok((x, y))
    }

    /// Geometry of a concrete pair when its lowest common ancestor is the
    /// root, oriented with `d_xr <= d_yr`.
    pub fn of_pair<T: Scalar>(tree: &PerfectTree<T>, a: NodeId, b: NodeId) -> Option<Self> {
        if a == b || tree.lowest_common_ancestor(a, b) != tree.root() {
            return None;
        }
        let (la, lb) = (tree.level[a.0], tree.level[b.0]);
        let geom = TreeGeometry {
            arity: tree.arity as u32,
            height: tree.height,
            d_xr: la.min(lb),
            d_xy: la + lb,
        };
        Some(geom)
    }
}

/// `Ω({x, y}) = 2 R_NF({x, y})` for two leaders in a perfect M-ary tree
/// whose lowest common ancestor is the root.
pub fn tree_omega<T: Scalar>(geom: &TreeGeometry) -> Result<T> {
    let g = TreeGeometry::new(geom.arity, geom.height, geom.d_xr, geom.d_xy)?;
    if g.height < 1 {
        return Err(Error::BadGeometry("height must be at least 1".into()));
    }
    let m = T::from_i64(g.arity as i64);
    let one = T::one();
    let mm1 = m - one;
    let mm1_2 = mm1 * mm1;
    let mm1_3 = mm1_2 * mm1;
    let h = T::from_i64(g.height as i64);
    let dxr = T::from_i64(g.d_xr as i64);
    let dxy = T::from_i64(g.d_xy as i64);
    let big = m.powi(g.height as i32 + 1);
    let two = T::from_i64(2);
    let three = T::from_i64(3);

    let path_part = (big + one) / mm1 * (dxr - dxr * dxr / dxy);
    let branch = big
        * (two / mm1_2 + (m + one) / (mm1_3 * dxy))
        * (m.powi(g.d_xr as i32 - g.d_xy as i32) + m.powi(-(g.d_xr as i32)));
    let bulk = big * (h / mm1 - three / mm1_2 - two * (m + one) / (mm1_3 * dxy));
    Ok(path_part + branch + bulk + dxy / mm1 + m / mm1_2)
}

/// Optimal two-leader placement in a perfect M-ary tree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeOptimum<T> {
    pub geometry: TreeGeometry,
    /// Noise-free coherence of the placement.
    pub value: T,
    /// Set when the height is below the range where the placement is known
    /// in closed form and the result comes from exhaustive search instead.
    pub exhaustive_fallback: bool,
}

/// The known optimal geometry for height at least 4.
pub fn tree_optimal_two<T: Scalar>(arity: u32, height: u32) -> Result<TreeOptimum<T>> {
    if arity < 2 {
        return Err(Error::BadParameter(format!(
            "arity must be >= 2, got {arity}"
        )));
    }
    if height < 4 {
        return Err(Error::HeightTooSmall(height));
    }
    let (d_xr, d_xy) = match arity {
        2 => (2, 4),
        3 => (1, 2),
        _ => (0, 1),
    };
    let geometry = TreeGeometry::new(arity, height, d_xr, d_xy)?;
    let value = tree_omega::<T>(&geometry)? / T::from_i64(2);
    Ok(TreeOptimum {
        geometry,
        value,
        exhaustive_fallback: false,
    })
}

/// Like [`tree_optimal_two`], but heights below 4 are answered by an
/// exhaustive two-leader search on the realized tree.
pub fn tree_optimal_two_with_fallback<T: Scalar>(
    arity: u32,
    height: u32,
) -> Result<TreeOptimum<T>> {
    match tree_optimal_two(arity, height) {
        Err(Error::HeightTooSmall(_)) => {}
        other => return other,
    }
    if height == 0 {
        return Err(Error::BadParameter(
            "a single-node tree cannot host two leaders".into(),
        ));
    }
    let tree = crate::graph::perfect_tree::<T>(arity as usize, height)?;
    let found = brute_force_select(
        &tree.graph,
        2,
        Dynamics::NoiseFree,
        &StubbornnessMap::default(),
        &SearchOptions::default(),
    )?;
    let best = &found.optimal_sets[0];
    let (a, b) = (best.as_slice()[0], best.as_slice()[1]);
    let geometry = TreeGeometry::of_pair(&tree, a, b)
        .ok_or_else(|| Error::BadGeometry("optimal pair does not meet at the root".into()))?;
    Ok(TreeOptimum {
        geometry,
        value: found.value,
        exhaustive_fallback: true,
    })
}

/// The optimal two-leader coherence expressed through the node count
/// `n` of the tree (binary, ternary, and arity >= 4 forms).
pub fn tree_optimal_value_by_size(arity: u32, height: u32) -> Result<f64> {
    if arity < 2 {
        return Err(Error::BadParameter(format!(
            "arity must be >= 2, got {arity}"
        )));
    }
    let m = arity as f64;
    let n = crate::graph::perfect_tree_size(arity as usize, height)
        .ok_or_else(|| Error::BadParameter("tree too large".into()))? as f64;
    Ok(match arity {
        2 => (n + 1.0) / 2.0 * ((n + 1.0).log2() - 25.0 / 8.0) + 3.5,
        3 => (2.0 * n + 1.0) / 4.0 * ((2.0 * n + 1.0).log(3.0) - 2.0) + 1.0,
        _ => {
            0.5 * (n + 1.0 / (m - 1.0)) * (n * m - n + 1.0).log(m)
                - n * (m * m + m - 1.0) / (2.0 * m * (m - 1.0))
                + 1.0 / (2.0 * m)
        }
    })
}

/// How [`cycle_nc_two_coherence`] evaluates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NcCycleRoute {
    /// Grounded-Laplacian trace on the realized cycle.
    #[default]
    Trace,
    /// Rational expression in `n` and `i` from summing the edge-addition
    /// update over all nodes.
    Polynomial,
}

/// Noise-corrupted coherence of an `n`-cycle with unit-stubbornness
/// leaders at labels 1 and `i` (1-based, nodes `0` and `i - 1`). For `i = 1`
/// both attachments land on the same node, i.e. one leader with κ = 2.
pub fn cycle_nc_two_coherence<T: Scalar>(n: u64, i: u64, route: NcCycleRoute) -> Result<T> {
    if n < 3 || i == 0 || i > n {
        return Err(Error::BadParameter(format!(
            "need n >= 3 and 1 <= i <= n, got n = {n}, i = {i}"
        )));
    }
    match route {
        NcCycleRoute::Trace => {
            let g = cycle::<T>(n as usize)?;
            let (leaders, kappa) = if i == 1 {
                (
                    LeaderSet::new([0])?,
                    StubbornnessMap::uniform(T::from_i64(2))?,
                )
            } else {
                (
                    LeaderSet::new([0, (i - 1) as usize])?,
                    StubbornnessMap::default(),
                )
            };
            Ok(coherence_nc(&g, &leaders, &kappa, Method::Trace)?.value)
        }
        NcCycleRoute::Polynomial => Ok(cycle_nc_polynomial(n, i)),
    }
}

/// `(n² + 6n - 1)/12 - P(n, i) / (12 n (2 + (i-1)(n-i+1)/n))` with
/// `P = 2i⁴ - 4i³(n+2) + i²(2n² + 6n + 11) + i(2n² + n - 6) + 2n² - 3n + 1`.
fn cycle_nc_polynomial<T: Scalar>(n: u64, i: u64) -> T {
    let n = T::from_i64(n as i64);
    let i = T::from_i64(i as i64);
    let c = T::from_i64;
    let lead = (n * n + c(6) * n - c(1)) / c(12);
    let p = c(2) * i.powi(4) - c(4) * i.powi(3) * (n + c(2))
        + i * i * (c(2) * n * n + c(6) * n + c(11))
        + i * (c(2) * n * n + n - c(6))
        + c(2) * n * n
        - c(3) * n
        + c(1);
    let r1i = (i - c(1)) * (n - (i - c(1))) / n;
    lead - p / (c(12) * n * (c(2) + r1i))
}

/// Optimal label `i` of the second leader (with the first at label 1):
/// the antipode, `(n + 2)/2`.
pub fn cycle_nc_optimal_label(n: u64) -> Result<u64> {
    check_even_cycle(n)?;
    Ok((n + 2) / 2)
}

/// Minimum noise-corrupted coherence with two antipodal leaders on an even
/// cycle: `(n³ + 16n² + 44n - 16) / (24(n + 8))`.
pub fn cycle_nc_optimal_value<T: Scalar>(n: u64) -> Result<T> {
    check_even_cycle(n)?;
    let n = T::from_i64(n as i64);
    let c = T::from_i64;
    Ok((n * n * n + c(16) * n * n + c(44) * n - c(16)) / (c(24) * (n + c(8))))
}

fn check_even_cycle(n: u64) -> Result<()> {
    if n % 2 == 1 {
        return Err(Error::OddN(n));
    }
    if n < 4 {
        return Err(Error::BadParameter(format!("need an even n >= 4, got {n}")));
    }
    Ok(())
}
