//! Parameter sweeps over the closed-form families, for scaling tables.

use std::fmt::Write as _;

use serde::Serialize;

use crate::closed_forms::{
    cycle_nc_optimal_value, cycle_nf_optimal, path_nf_optimal, tree_optimal_two_with_fallback,
};
use crate::coherence::{leader_free_coherence, Dynamics, StubbornnessMap};
use crate::error::{Error, Result};
use crate::graph::{cycle, path, perfect_tree, Graph};
use crate::selection::{brute_force_select, SearchOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Cycle,
    Path,
    /// Perfect tree of the given arity; sweep sizes are heights.
    Tree {
        arity: usize,
    },
}

impl Family {
    fn label(&self) -> String {
        match self {
            Family::Cycle => "cycle".into(),
            Family::Path => "path".into(),
            Family::Tree { arity } => format!("tree{arity}"),
        }
    }

    fn graph(&self, size: usize) -> Result<Graph<f64>> {
        match *self {
            Family::Cycle => cycle(size),
            Family::Path => path(size),
            Family::Tree { arity } => {
                let h = u32::try_from(size)
                    .map_err(|_| Error::BadParameter("height too large".into()))?;
                Ok(perfect_tree(arity, h)?.graph)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRequest {
    pub family: Family,
    /// Node counts for cycles and paths, heights for trees.
    pub sizes: Vec<usize>,
    /// Leader count (ignored for leader-free dynamics).
    pub k: usize,
    pub dynamics: Dynamics,
    /// Uniform stubbornness for noise-corrupted leaders.
    pub kappa: f64,
    pub options: SearchOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub family: String,
    pub n: usize,
    pub k: usize,
    pub dynamics: Dynamics,
    pub method: &'static str,
    pub value: f64,
    pub value_over_n2: f64,
}

/// Optimal (or, for leader-free dynamics, the only) coherence at each size,
/// from a closed form where one applies and exhaustive search otherwise.
pub fn run_sweep(req: &SweepRequest) -> Result<Vec<SweepRow>> {
    let kappa = StubbornnessMap::uniform(req.kappa)?;
    req.sizes
        .iter()
        .map(|&size| {
            let k = if req.dynamics == Dynamics::LeaderFree {
                0
            } else {
                req.k
            };
            let (n, method, value) = evaluate(req, size, k, &kappa)?;
            Ok(SweepRow {
                family: req.family.label(),
                n,
                k,
                dynamics: req.dynamics,
                method,
                value,
                value_over_n2: value / (n as f64 * n as f64),
            })
        })
        .collect()
}

fn evaluate(
    req: &SweepRequest,
    size: usize,
    k: usize,
    kappa: &StubbornnessMap<f64>,
) -> Result<(usize, &'static str, f64)> {
    use Dynamics::*;
    let unit_kappa = req.kappa == 1.0;
    match (req.family, req.dynamics) {
        (_, LeaderFree) => {
            let g = req.family.graph(size)?;
            Ok((g.node_count(), "trace", leader_free_coherence(&g)?.value))
        }
        (Family::Cycle, NoiseFree) => Ok((
            size,
            "closed_form",
            cycle_nf_optimal::<f64>(size as u64, k as u64)?.value,
        )),
        (Family::Cycle, NoiseCorrupted) if k == 2 && unit_kappa && size.is_multiple_of(2) => Ok((
            size,
            "closed_form",
            cycle_nc_optimal_value::<f64>(size as u64)?,
        )),
        (Family::Path, NoiseFree) => Ok((
            size,
            "closed_form",
            path_nf_optimal::<f64>(size as u64, k as u64)?.value,
        )),
        (Family::Tree { arity }, NoiseFree) if k == 2 => {
            let h = size as u32;
            let n = crate::graph::perfect_tree_size(arity, h)
                .ok_or_else(|| Error::BadParameter("tree too large".into()))?;
            let o = tree_optimal_two_with_fallback::<f64>(arity as u32, h)?;
            let method = if o.exhaustive_fallback {
                "exhaustive"
            } else {
                "closed_form"
            };
            Ok((n, method, o.value))
        }
        _ => {
            let g = req.family.graph(size)?;
            let found = brute_force_select(&g, k, req.dynamics, kappa, &req.options)?;
            Ok((g.node_count(), "exhaustive", found.value))
        }
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("family,n,k,dynamics,method,value,value_over_n2\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.family, r.n, r.k, r.dynamics, r.method, r.value, r.value_over_n2
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(family: Family, sizes: Vec<usize>, k: usize, dynamics: Dynamics) -> SweepRequest {
        SweepRequest {
            family,
            sizes,
            k,
            dynamics,
            kappa: 1.0,
            options: SearchOptions::default(),
        }
    }

    #[test]
    fn cycle_scaling_columns() {
        let sizes: Vec<usize> = (3..=11).map(|p| 1 << p).collect();
        let nf = run_sweep(&req(Family::Cycle, sizes.clone(), 2, Dynamics::NoiseFree)).unwrap();
        let last = nf.last().unwrap();
        assert!((last.value_over_n2 - 1.0 / 24.0).abs() < 1e-6);
        let nc = run_sweep(&req(
            Family::Cycle,
            sizes.clone(),
            2,
            Dynamics::NoiseCorrupted,
        ))
        .unwrap();
        assert!((nc.last().unwrap().value_over_n2 - 1.0 / 24.0).abs() < 1e-3);
        let free = run_sweep(&req(
            Family::Cycle,
            sizes[..6].to_vec(),
            2,
            Dynamics::LeaderFree,
        ))
        .unwrap();
        for r in &free {
            let n = r.n as f64;
            assert!((r.value - (n * n - 1.0) / 24.0).abs() < 1e-6 * n * n);
        }
        let csv = rows_to_csv(&nf);
        assert!(csv.starts_with(
            "family,n,k,dynamics,method,value,value_over_n2\ncycle,8,2,noise_free,closed_form,"
        ));
    }

    #[test]
    fn exhaustive_fallback_respects_budget() {
        let mut r = req(Family::Path, vec![12], 3, Dynamics::NoiseCorrupted);
        let rows = run_sweep(&r).unwrap();
        assert_eq!(rows[0].method, "exhaustive");
        r.options.budget = 10;
        assert!(matches!(run_sweep(&r), Err(Error::BudgetExceeded { .. })));
    }
}
