//! Noise-free, noise-corrupted and leader-free coherence, each available
//! through a grounded-Laplacian trace and through effective resistances.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::electrical::{augment_graph, factor_grounded, ResistanceOracle};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::scalar::Scalar;

/// Sorted, duplicate-free set of leader nodes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LeaderSet {
    members: Vec<NodeId>,
}

impl LeaderSet {
    pub fn new<I: IntoIterator<Item = usize>>(members: I) -> Result<Self> {
        let mut members: Vec<NodeId> = members.into_iter().map(NodeId).collect();
        if members.is_empty() {
            return Err(Error::EmptyLeaderSet);
        }
        members.sort_unstable();
        if let Some(w) = members.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateLeader(w[0].0));
        }
        Ok(LeaderSet { members })
    }

    /// Every node of an `n`-node graph.
    pub fn all(n: usize) -> Self {
        LeaderSet {
            members: (0..n).map(NodeId).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.members.iter().copied()
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.members
    }

    pub fn indices(&self) -> Vec<usize> {
        self.members.iter().map(|v| v.0).collect()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for v in &self.members {
            m[v.0] = true;
        }
        m
    }

    pub fn with(&self, v: NodeId) -> Self {
        let mut members = self.members.clone();
        if let Err(pos) = members.binary_search(&v) {
            members.insert(pos, v);
        }
        LeaderSet { members }
    }

    pub fn validate_for<T: Scalar>(&self, g: &Graph<T>) -> Result<()> {
        self.members.iter().try_for_each(|&v| g.check_node(v))
    }
}

impl fmt::Display for LeaderSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members.iter().map(|v| v.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Degree of stubbornness per node; nodes without an explicit value use the
/// default (1 unless stated otherwise).
#[derive(Clone, Debug, PartialEq)]
pub struct StubbornnessMap<T> {
    default: T,
    overrides: BTreeMap<NodeId, T>,
}

fn check_kappa<T: Scalar>(node: usize, value: T) -> Result<T> {
    if value > T::zero() && value.to_f64().is_finite() {
        Ok(value)
    } else {
        Err(Error::BadKappa {
            node,
            value: value.to_string(),
        })
    }
}

impl<T: Scalar> Default for StubbornnessMap<T> {
    fn default() -> Self {
        StubbornnessMap {
            default: T::one(),
            overrides: BTreeMap::new(),
        }
    }
}

impl<T: Scalar> StubbornnessMap<T> {
    pub fn uniform(kappa: T) -> Result<Self> {
        Ok(StubbornnessMap {
            default: check_kappa(usize::MAX, kappa)?,
            overrides: BTreeMap::new(),
        })
    }

    /// One value per leader, in the leader set's order.
    pub fn per_leader(leaders: &LeaderSet, values: &[T]) -> Result<Self> {
        if values.len() != leaders.len() {
            return Err(Error::BadParameter(format!(
                "{} stubbornness values for {} leaders",
                values.len(),
                leaders.len()
            )));
        }
        leaders
            .iter()
            .zip(values)
            .try_fold(Self::default(), |m, (v, &k)| m.with(v, k))
    }

    pub fn with(mut self, node: NodeId, kappa: T) -> Result<Self> {
        self.overrides.insert(node, check_kappa(node.0, kappa)?);
        Ok(self)
    }

    pub fn get(&self, node: NodeId) -> T {
        self.overrides.get(&node).copied().unwrap_or(self.default)
    }

    fn diagonal(&self, leaders: &LeaderSet, n: usize) -> Vec<T> {
        let mut shift = vec![T::zero(); n];
        for s in leaders.iter() {
            shift[s.0] = self.get(s);
        }
        shift
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    NoiseFree,
    NoiseCorrupted,
    LeaderFree,
}

impl fmt::Display for Dynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dynamics::NoiseFree => "noise_free",
            Dynamics::NoiseCorrupted => "noise_corrupted",
            Dynamics::LeaderFree => "leader_free",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Trace,
    Resistance,
    ClosedForm,
    Simulation,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Trace => "trace",
            Method::Resistance => "resistance",
            Method::ClosedForm => "closed_form",
            Method::Simulation => "simulation",
        })
    }
}

/// A coherence value together with how it was obtained.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceReport<T> {
    pub value: T,
    pub dynamics: Dynamics,
    pub method: Method,
    pub graph: Option<String>,
    pub leaders: Vec<NodeId>,
    /// Stubbornness per leader, for noise-corrupted dynamics.
    pub kappa: Option<Vec<T>>,
}

impl<T: Scalar> CoherenceReport<T> {
    pub fn new(value: T, dynamics: Dynamics, method: Method, leaders: &[NodeId]) -> Self {
        CoherenceReport {
            value,
            dynamics,
            method,
            graph: None,
            leaders: leaders.to_vec(),
            kappa: None,
        }
    }

    pub fn with_graph(mut self, label: impl Into<String>) -> Self {
        self.graph = Some(label.into());
        self
    }
}

impl<T: Scalar> Serialize for CoherenceReport<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            value: f64,
            dynamics: Dynamics,
            method: Method,
            graph: Option<&'a str>,
            leaders: &'a [NodeId],
            kappa: Option<Vec<f64>>,
        }
        Wire {
            value: self.value.to_f64(),
            dynamics: self.dynamics,
            method: self.method,
            graph: self.graph.as_deref(),
            leaders: &self.leaders,
            kappa: self
                .kappa
                .as_ref()
                .map(|k| k.iter().map(|v| v.to_f64()).collect()),
        }
        .serialize(serializer)
    }
}

fn half<T: Scalar>(v: T) -> T {
    v / T::from_i64(2)
}

fn sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    values.into_iter().fold(T::zero(), |acc, v| acc + v)
}

fn check_method(method: Method) -> Result<()> {
    match method {
        Method::Trace | Method::Resistance => Ok(()),
        other => Err(Error::BadParameter(format!(
            "method {other} is not available for arbitrary graphs"
        ))),
    }
}

/// `R_NF(S) = ½ tr(L_ff⁻¹) = ½ Σ_{i∉S} r(i, S)`.
pub fn coherence_nf<T: Scalar>(
    g: &Graph<T>,
    leaders: &LeaderSet,
    method: Method,
) -> Result<CoherenceReport<T>> {
    check_method(method)?;
    leaders.validate_for(g)?;
    g.require_connected()?;
    let value = if leaders.len() == g.node_count() {
        T::zero()
    } else if method == Method::Trace {
        let (_, factor) = factor_grounded(g, &leaders.mask(g.node_count()), None)?;
        half(factor.trace_of_inverse())
    } else {
        let oracle = ResistanceOracle::new(g)?;
        half(sum(oracle.set_resistances(leaders)?))
    };
    Ok(CoherenceReport::new(
        value,
        Dynamics::NoiseFree,
        method,
        leaders.as_slice(),
    ))
}

/// `R_NC(S) = ½ tr((L + D_κ D_S)⁻¹) = ½ Σ_{i∈V} r̄(i, s̄)`.
pub fn coherence_nc<T: Scalar>(
    g: &Graph<T>,
    leaders: &LeaderSet,
    kappa: &StubbornnessMap<T>,
    method: Method,
) -> Result<CoherenceReport<T>> {
    check_method(method)?;
    leaders.validate_for(g)?;
    g.require_connected()?;
    let n = g.node_count();
    let value = match method {
        Method::Trace => {
            let shift = kappa.diagonal(leaders, n);
            let (_, factor) = factor_grounded(g, &vec![false; n], Some(&shift))?;
            half(factor.trace_of_inverse())
        }
        _ => {
            let aug = augment_graph(g, leaders, kappa)?;
            let oracle = ResistanceOracle::new(&aug.graph)?;
            half(sum(g.nodes().map(|i| oracle.get(i, aug.s_bar))))
        }
    };
    let mut report =
        CoherenceReport::new(value, Dynamics::NoiseCorrupted, method, leaders.as_slice());
    report.kappa = Some(leaders.iter().map(|s| kappa.get(s)).collect());
    Ok(report)
}

/// The single leader minimizing the chosen coherence; ties go to the
/// smallest id.
pub fn best_single_leader<T: Scalar>(
    g: &Graph<T>,
    dynamics: Dynamics,
    kappa: &StubbornnessMap<T>,
) -> Result<(NodeId, CoherenceReport<T>)> {
    let oracle = ResistanceOracle::new(g)?;
    let n = T::from_usize(g.node_count());
    let score = |v: NodeId| -> Result<T> {
        let total = oracle.total_resistance_from(v);
        match dynamics {
            Dynamics::NoiseFree => Ok(half(total)),
            Dynamics::NoiseCorrupted => Ok(half(total + n / kappa.get(v))),
            Dynamics::LeaderFree => Err(Error::BadParameter(
                "leader-free dynamics have no leader to select".into(),
            )),
        }
    };
    let mut best = (NodeId(0), score(NodeId(0))?);
    for v in g.nodes().skip(1) {
        let s = score(v)?;
        if s < best.1 - T::tie_window(best.1) {
            best = (v, s);
        }
    }
    let mut report = CoherenceReport::new(best.1, dynamics, Method::Resistance, &[best.0]);
    if dynamics == Dynamics::NoiseCorrupted {
        report.kappa = Some(vec![kappa.get(best.0)]);
    }
    Ok((best.0, report))
}

/// `V = ½ tr(L⁺)`, the steady-state variance of deviations from the
/// network average with no leaders.
pub fn leader_free_coherence<T: Scalar>(g: &Graph<T>) -> Result<CoherenceReport<T>> {
    g.require_connected()?;
    let n = g.node_count();
    let value = if n == 1 {
        T::zero()
    } else {
        // with G the inverse grounded at node 0 (zero-padded),
        // tr(L⁺) = tr(G) - 1ᵀG1 / n
        let mut grounded = vec![false; n];
        grounded[0] = true;
        let (_, factor) = factor_grounded(g, &grounded, None)?;
        let trace = factor.trace_of_inverse();
        let total = sum(factor.solve(&vec![T::one(); n - 1]));
        half(trace - total / T::from_usize(n))
    };
    Ok(CoherenceReport::new(
        value,
        Dynamics::LeaderFree,
        Method::Trace,
        &[],
    ))
}
