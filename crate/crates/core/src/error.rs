use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library reports. Variant names are part of the CLI's
/// structured error output.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edge ({u}, {v}) listed more than once")]
    DuplicateEdge { u: usize, v: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("edge ({u}, {v}) has non-positive or non-finite weight {weight}")]
    BadWeight { u: usize, v: usize, weight: String },
    #[error("node {node} out of range for a graph with {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("graph is disconnected")]
    Disconnected,
    #[error("nodes {0} and {1} are in different components")]
    Unreachable(usize, usize),
    #[error("query needs two distinct nodes, got {0} twice")]
    SameNode(usize),
    #[error("leader set is empty")]
    EmptyLeaderSet,
    #[error("node {0} appears more than once in the leader set")]
    DuplicateLeader(usize),
    #[error("node {0} is a leader; its resistance to the leader set is zero by definition")]
    LeaderQueried(usize),
    #[error("stubbornness for node {node} must be positive and finite, got {value}")]
    BadKappa { node: usize, value: String },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("bad gap vector: {0}")]
    BadGapVector(String),
    #[error("bad tree geometry: {0}")]
    BadGeometry(String),
    #[error("cycle length must be even, got {0}")]
    OddN(u64),
    #[error("tree height {0} is below 4")]
    HeightTooSmall(u32),
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: String },
    #[error("search needs {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("step {dt} is unstable: largest system eigenvalue {lambda_max} needs dt < {limit}")]
    UnstableStep {
        dt: f64,
        lambda_max: f64,
        limit: f64,
    },
    #[error("parse error at {position}: {message}")]
    ParseError { position: String, message: String },
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("i/o error on {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl Error {
    /// Stable machine-readable name, used in structured CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DuplicateEdge { .. } => "DuplicateEdge",
            Error::SelfLoop(_) => "SelfLoop",
            Error::BadWeight { .. } => "BadWeight",
            Error::NodeOutOfRange { .. } => "NodeOutOfRange",
            Error::EmptyGraph => "EmptyGraph",
            Error::Disconnected => "Disconnected",
            Error::Unreachable(..) => "Unreachable",
            Error::SameNode(_) => "SameNode",
            Error::EmptyLeaderSet => "EmptyLeaderSet",
            Error::DuplicateLeader(_) => "DuplicateLeader",
            Error::LeaderQueried(_) => "LeaderQueried",
            Error::BadKappa { .. } => "BadKappa",
            Error::BadParameter(_) => "BadParameter",
            Error::OutOfRange(_) => "OutOfRange",
            Error::BadGapVector(_) => "BadGapVector",
            Error::BadGeometry(_) => "BadGeometry",
            Error::OddN(_) => "OddN",
            Error::HeightTooSmall(_) => "HeightTooSmall",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::UnstableStep { .. } => "UnstableStep",
            Error::ParseError { .. } => "ParseError",
            Error::FileNotFound(_) => "FileNotFound",
            Error::Io { .. } => "Io",
        }
    }

    /// Errors caused by malformed or out-of-contract input, as opposed to a
    /// computation that could not complete.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::BudgetExceeded { .. }
                | Error::UnstableStep { .. }
                | Error::Io { .. }
        )
    }
}
