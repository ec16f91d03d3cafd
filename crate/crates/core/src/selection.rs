//! Exhaustive k-leader selection.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::coherence::{
    coherence_nc, CoherenceReport, Dynamics, LeaderSet, Method, StubbornnessMap,
};
use crate::electrical::{factor_grounded, ResistanceOracle};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::scalar::Scalar;

pub const DEFAULT_BUDGET: u128 = 10_000_000;
pub const DEFAULT_CAP: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    /// Largest number of candidate sets to evaluate.
    pub budget: u128,
    /// Largest number of co-optimal sets to keep.
    pub cap: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: DEFAULT_BUDGET,
            cap: DEFAULT_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult<T> {
    /// Co-optimal sets in lexicographic order, at most `cap` of them.
    pub optimal_sets: Vec<LeaderSet>,
    /// Total number of co-optimal sets, including any past the cap.
    pub optimal_count: usize,
    pub value: T,
    pub dynamics: Dynamics,
    pub evaluated_count: u128,
    pub elapsed: Duration,
}

impl<T: Scalar> Serialize for SelectionResult<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire {
            optimal_sets: Vec<Vec<usize>>,
            optimal_count: usize,
            value: f64,
            dynamics: Dynamics,
            evaluated_count: u128,
            elapsed_seconds: f64,
        }
        Wire {
            optimal_sets: self.optimal_sets.iter().map(LeaderSet::indices).collect(),
            optimal_count: self.optimal_count,
            value: self.value.to_f64(),
            dynamics: self.dynamics,
            evaluated_count: self.evaluated_count,
            elapsed_seconds: self.elapsed.as_secs_f64(),
        }
        .serialize(serializer)
    }
}

/// `C(n, k)`, saturating.
pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Best sets seen so far, in the order they were offered.
struct Tally<T> {
    value: Option<T>,
    sets: Vec<LeaderSet>,
    count: usize,
    cap: usize,
}

impl<T: Scalar> Tally<T> {
    fn new(cap: usize) -> Self {
        Tally {
            value: None,
            sets: Vec::new(),
            count: 0,
            cap,
        }
    }

    fn offer(&mut self, value: T, set: impl FnOnce() -> LeaderSet) {
        match self.value {
            Some(best) if value > best + T::tie_window(best) => {}
            Some(best) if value >= best - T::tie_window(best) => {
                self.count += 1;
                if self.sets.len() < self.cap {
                    self.sets.push(set());
                }
                if value < best {
                    self.value = Some(value);
                }
            }
            _ => {
                self.value = Some(value);
                self.sets.clear();
                self.sets.push(set());
                self.count = 1;
            }
        }
    }

    fn absorb(&mut self, other: Tally<T>) {
        let Some(v) = other.value else { return };
        match self.value {
            Some(best) if v > best + T::tie_window(best) => {}
            Some(best) if v >= best - T::tie_window(best) => {
                self.count += other.count;
                let room = self.cap - self.sets.len();
                self.sets.extend(other.sets.into_iter().take(room));
                if v < best {
                    self.value = Some(v);
                }
            }
            _ => *self = other,
        }
    }
}

/// Advances `combo` (strictly increasing, entries < n) to the next
/// combination in lexicographic order; false when exhausted.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    for i in (0..k).rev() {
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn set_of(combo: &[usize]) -> LeaderSet {
    LeaderSet::new(combo.iter().copied()).expect("combinations are distinct")
}

/// Evaluates one candidate set with whatever preprocessing is shared.
struct Evaluator<'a, T> {
    graph: &'a Graph<T>,
    dynamics: Dynamics,
    kappa: &'a StubbornnessMap<T>,
    oracle: Option<ResistanceOracle<T>>,
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    fn new(
        graph: &'a Graph<T>,
        dynamics: Dynamics,
        kappa: &'a StubbornnessMap<T>,
        with_oracle: bool,
    ) -> Result<Self> {
        if dynamics == Dynamics::LeaderFree {
            return Err(Error::BadParameter(
                "leader-free dynamics have no leaders to select".into(),
            ));
        }
        graph.require_connected()?;
        let oracle = if with_oracle {
            Some(ResistanceOracle::new(graph)?)
        } else {
            None
        };
        Ok(Evaluator {
            graph,
            dynamics,
            kappa,
            oracle,
        })
    }

    fn value(&self, combo: &[usize]) -> Result<T> {
        let n = self.graph.node_count();
        match (self.dynamics, combo.len(), &self.oracle) {
            (_, k, _) if k == n && self.dynamics == Dynamics::NoiseFree => Ok(T::zero()),
            (Dynamics::NoiseFree, 1, Some(o)) => {
                Ok(o.total_resistance_from(NodeId(combo[0])) / T::from_i64(2))
            }
            (Dynamics::NoiseFree, 2, Some(o)) => {
                o.two_leader_coherence(NodeId(combo[0]), NodeId(combo[1]))
            }
            (Dynamics::NoiseCorrupted, 1, Some(o)) => {
                let v = NodeId(combo[0]);
                let total = o.total_resistance_from(v) + T::from_usize(n) / self.kappa.get(v);
                Ok(total / T::from_i64(2))
            }
            (Dynamics::NoiseFree, _, _) => {
                let mut mask = vec![false; n];
                for &v in combo {
                    mask[v] = true;
                }
                let (_, factor) = factor_grounded(self.graph, &mask, None)?;
                Ok(factor.trace_of_inverse() / T::from_i64(2))
            }
            _ => Ok(coherence_nc(self.graph, &set_of(combo), self.kappa, Method::Trace)?.value),
        }
    }

    fn method_for(&self, k: usize) -> Method {
        match (self.dynamics, k, &self.oracle) {
            (Dynamics::NoiseFree, 1 | 2, Some(_)) | (Dynamics::NoiseCorrupted, 1, Some(_)) => {
                Method::Resistance
            }
            _ => Method::Trace,
        }
    }
}

/// All optimal leader sets of size exactly `k`.
///
/// Candidates are enumerated lexicographically; workers each take a range
/// of first elements and their tallies are merged in that order, so the
/// result does not depend on scheduling.
pub fn brute_force_select<T: Scalar>(
    g: &Graph<T>,
    k: usize,
    dynamics: Dynamics,
    kappa: &StubbornnessMap<T>,
    options: &SearchOptions,
) -> Result<SelectionResult<T>> {
    let start = Instant::now();
    let n = g.node_count();
    if k == 0 {
        return Err(Error::EmptyLeaderSet);
    }
    if k > n {
        return Err(Error::BadParameter(format!(
            "k = {k} exceeds node count {n}"
        )));
    }
    let needed = binomial(n as u128, k as u128);
    if needed > options.budget {
        return Err(Error::BudgetExceeded {
            needed,
            budget: options.budget,
        });
    }
    let evaluator = Evaluator::new(g, dynamics, kappa, k <= 2)?;
    let tallies: Vec<Result<Tally<T>>> = (0..=n - k)
        .into_par_iter()
        .map(|first| {
            let mut tally = Tally::new(options.cap);
            let mut combo: Vec<usize> = (first..first + k).collect();
            loop {
                let v = evaluator.value(&combo)?;
                tally.offer(v, || set_of(&combo));
                // the tail starts above `first` and only grows
                if k == 1 || !next_combination(&mut combo[1..], n) {
                    break;
                }
            }
            Ok(tally)
        })
        .collect();
    let mut total = Tally::new(options.cap);
    for t in tallies {
        total.absorb(t?);
    }
    Ok(SelectionResult {
        optimal_sets: total.sets,
        optimal_count: total.count,
        value: total.value.expect("at least one candidate"),
        dynamics,
        evaluated_count: needed,
        elapsed: start.elapsed(),
    })
}

/// Coherence of each candidate, in input order; a bad candidate yields an
/// error entry without aborting the batch.
pub fn evaluate_candidates<T: Scalar>(
    g: &Graph<T>,
    candidates: &[LeaderSet],
    dynamics: Dynamics,
    kappa: &StubbornnessMap<T>,
) -> Result<Vec<Result<CoherenceReport<T>>>> {
    let wants_oracle = candidates.iter().any(|c| c.len() <= 2);
    let evaluator = Evaluator::new(g, dynamics, kappa, wants_oracle)?;
    Ok(candidates
        .par_iter()
        .map(|s| {
            s.validate_for(g)?;
            let value = evaluator.value(&s.indices())?;
            let mut report =
                CoherenceReport::new(value, dynamics, evaluator.method_for(s.len()), s.as_slice());
            if dynamics == Dynamics::NoiseCorrupted {
                report.kappa = Some(s.iter().map(|v| kappa.get(v)).collect());
            }
            Ok(report)
        })
        .collect())
}
