//! Euler–Maruyama simulation of leader-follower consensus under unit
//! white noise, for checking the analytic steady-state variances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::coherence::{LeaderSet, StubbornnessMap};
use crate::electrical::reduced_laplacian;
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Fraction of the horizon discarded before averaging.
    pub burn_in: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            horizon: 200.0,
            burn_in: 0.25,
            trials: 20,
            seed: 0,
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadParameter(m.into()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return bad("horizon must be at least one step");
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return bad("burn_in must lie in [0, 1)");
        }
        if self.trials == 0 {
            return bad("trials must be positive");
        }
        Ok(())
    }

    fn steps(&self) -> (usize, usize) {
        let total = (self.horizon / self.dt).round() as usize;
        let skip = ((total as f64) * self.burn_in).floor() as usize;
        (total, skip.min(total - 1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimEstimate {
    /// Time-averaged `Σ x_i²` after burn-in, averaged over trials.
    pub value: f64,
    /// Standard error of `value` across trials.
    pub stderr: f64,
    pub trials: usize,
}

/// Symmetric system matrix `A` in compressed rows; the state obeys
/// `dx = -A x dt + dW`.
struct System {
    diag: Vec<f64>,
    start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl System {
    fn from_graph(g: &Graph<f64>, grounded: &[bool], shift: Option<&[f64]>) -> Self {
        let reduced = reduced_laplacian(g, grounded, shift);
        let m = reduced.kept.len();
        let mut diag = vec![0.0; m];
        let mut start = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (row, &v) in reduced.kept.iter().enumerate() {
            diag[row] = g.degree(v) + shift.map_or(0.0, |s| s[v.0]);
            for &(u, w) in g.neighbors(v) {
                if let Some(col) = reduced.index[u.0] {
                    cols.push(col);
                    vals.push(-w);
                }
            }
            start.push(cols.len());
        }
        System {
            diag,
            start,
            cols,
            vals,
        }
    }

    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.dim() {
            let mut acc = self.diag[i] * x[i];
            for p in self.start[i]..self.start[i + 1] {
                acc += self.vals[p] * x[self.cols[p]];
            }
            out[i] = acc;
        }
    }

    /// Largest eigenvalue by power iteration (the matrix is positive
    /// semidefinite), padded by a small safety margin.
    fn lambda_max(&self) -> f64 {
        let m = self.dim();
        let mut x: Vec<f64> = (0..m)
            .map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0)
            .collect();
        let mut y = vec![0.0; m];
        let mut lambda = 0.0;
        for _ in 0..2000 {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
            self.apply(&x, &mut y);
            let next: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            std::mem::swap(&mut x, &mut y);
            if (next - lambda).abs() <= 1e-12 * next.abs() {
                lambda = next;
                break;
            }
            lambda = next;
        }
        lambda * (1.0 + 1e-6)
    }

    fn run(&self, cfg: &SimConfig) -> Result<SimEstimate> {
        cfg.validate()?;
        let m = self.dim();
        if m == 0 {
            return Ok(SimEstimate {
                value: 0.0,
                stderr: 0.0,
                trials: cfg.trials,
            });
        }
        let lambda_max = self.lambda_max();
        let limit = 2.0 / lambda_max;
        if cfg.dt >= limit {
            return Err(Error::UnstableStep {
                dt: cfg.dt,
                lambda_max,
                limit,
            });
        }
        let (total, skip) = cfg.steps();
        let sqrt_dt = cfg.dt.sqrt();
        let per_trial: Vec<f64> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(trial as u64);
                let mut x = vec![0.0; m];
                let mut ax = vec![0.0; m];
                let mut acc = 0.0;
                for step in 0..total {
                    self.apply(&x, &mut ax);
                    for i in 0..m {
                        let noise: f64 = StandardNormal.sample(&mut rng);
                        x[i] += -cfg.dt * ax[i] + sqrt_dt * noise;
                    }
                    if step >= skip {
                        acc += x.iter().map(|v| v * v).sum::<f64>();
                    }
                }
                acc / (total - skip) as f64
            })
            .collect();
        let trials = per_trial.len() as f64;
        let mean = per_trial.iter().sum::<f64>() / trials;
        let stderr = if per_trial.len() > 1 {
            let var = per_trial.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1.0);
            (var / trials).sqrt()
        } else {
            f64::NAN
        };
        Ok(SimEstimate {
            value: mean,
            stderr,
            trials: cfg.trials,
        })
    }
}

/// Followers obey `dx_f = -L_ff x_f dt + dW_f` with leaders pinned at 0.
pub fn simulate_nf(g: &Graph<f64>, leaders: &LeaderSet, cfg: &SimConfig) -> Result<SimEstimate> {
    leaders.validate_for(g)?;
    g.require_connected()?;
    System::from_graph(g, &leaders.mask(g.node_count()), None).run(cfg)
}

/// Every node obeys `dx = -(L + D_κ D_S) x dt + dW`.
pub fn simulate_nc(
    g: &Graph<f64>,
    leaders: &LeaderSet,
    kappa: &StubbornnessMap<f64>,
    cfg: &SimConfig,
) -> Result<SimEstimate> {
    leaders.validate_for(g)?;
    g.require_connected()?;
    let n = g.node_count();
    let mut shift = vec![0.0; n];
    for s in leaders.iter() {
        shift[s.0] = kappa.get(s);
    }
    System::from_graph(g, &vec![false; n], Some(&shift)).run(cfg)
}
