//! Coherence of leader-follower noisy consensus networks.
//!
//! The steady-state variance of a consensus network with noise-free or
//! noise-corrupted leaders equals half the sum of effective resistances from
//! every follower to the leader set (respectively from every node to an
//! auxiliary ground node). This crate computes those quantities by grounded
//! Laplacian traces and by resistances, provides closed forms for cycles,
//! paths and perfect M-ary trees, and searches for optimal leader sets.
//!
//! Numerical code is generic over [`Scalar`]; [`Real`] (`f64`) is the
//! production choice and [`Exact`] (a 128-bit rational) reproduces small
//! instances without rounding.

pub mod closed_forms;
pub mod coherence;
pub mod electrical;
pub mod error;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod scalar;
pub mod selection;
pub mod sim;
pub mod sweep;
pub mod treegrow;

pub use closed_forms::{
    cycle_nc_optimal_label, cycle_nc_optimal_value, cycle_nc_two_coherence, cycle_nf_coherence,
    cycle_nf_optimal, path_nf_coherence, path_nf_optimal, tree_omega, tree_optimal_two,
    tree_optimal_two_with_fallback, GapVector, NcCycleRoute, TreeGeometry,
};
pub use coherence::{
    best_single_leader, coherence_nc, coherence_nf, leader_free_coherence, CoherenceReport,
    Dynamics, LeaderSet, Method, StubbornnessMap,
};
pub use electrical::{
    augment_graph, edge_addition_update, path_two_point_resistance, resistance, resistance_oracle,
    resistance_to_set, AugmentedGraph, ResistanceOracle,
};
pub use error::{Error, Result};
pub use graph::{cycle, path, perfect_tree, Edge, Graph, NodeId, PerfectTree};
pub use io::{parse_graph_spec, GraphSpec};
pub use scalar::Scalar;
pub use selection::{brute_force_select, evaluate_candidates, SearchOptions, SelectionResult};
pub use sim::{simulate_nc, simulate_nf, SimConfig, SimEstimate};
pub use sweep::{run_sweep, Family, SweepRequest, SweepRow};
pub use treegrow::{growth_trajectory, GrowingTree, Trajectory};

/// Double-precision scalar used by the CLI and the simulations.
pub type Real = f64;
/// Exact rational scalar for small instances.
pub type Exact = num_rational::Ratio<i128>;

pub type RealGraph = Graph<Real>;
pub type ExactGraph = Graph<Exact>;
pub type RealOracle = ResistanceOracle<Real>;
pub type ExactOracle = ResistanceOracle<Exact>;
pub type RealReport = CoherenceReport<Real>;
