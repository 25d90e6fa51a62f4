//! Monte Carlo check of uniform consistency for the Bradley-Terry-ε
//! estimate with `ε = sqrt(log t / t)`.
//!
//! Each replica draws merits, plays a full round robin of Bernoulli games,
//! fits the model and records `max_i |û_i/u_i - 1|` after both merit vectors
//! are scaled to unit geometric mean.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturbation::auto_epsilon;
use crate::solver::{fit, SolverConfig};
use crate::types::{Dataset, Model, ModelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyConfig {
    pub t_grid: Vec<usize>,
    /// Games per pair.
    pub games_per_pair: u64,
    pub replicas: usize,
    pub seed: u64,
    /// True merits are drawn uniformly from this interval.
    pub merit_range: (f64, f64),
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        Self {
            t_grid: vec![20, 50, 100],
            games_per_pair: 4,
            replicas: 50,
            seed: 0,
            merit_range: (1.0, 2.0),
        }
    }
}

impl ConsistencyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() {
            return Err(Error::config("t grid is empty"));
        }
        if let Some(t) = self.t_grid.iter().find(|&&t| t < 3) {
            return Err(Error::config(format!("every t must be at least 3, got {t}")));
        }
        if self.games_per_pair == 0 {
            return Err(Error::config("games per pair must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(Error::config("replicas must be at least 1"));
        }
        let (lo, hi) = self.merit_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::config(format!("invalid merit range [{lo}, {hi}]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySummary {
    pub t: usize,
    pub epsilon: f64,
    /// Max relative error of each replica.
    pub errors: Vec<f64>,
    pub median: f64,
    pub p90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub config: ConsistencyConfig,
    pub summaries: Vec<ConsistencySummary>,
}

impl ConsistencyReport {
    /// Median error strictly decreases along the t grid.
    pub fn median_strictly_decreasing(&self) -> bool {
        self.summaries.windows(2).all(|w| w[1].median < w[0].median)
    }
}

/// `max_i |û_i/u_i - 1|` with both vectors rescaled to geometric mean 1.
pub fn max_relative_error(estimated: &[f64], truth: &[f64]) -> f64 {
    let log_mean = |u: &[f64]| u.iter().map(|x| x.ln()).sum::<f64>() / u.len() as f64;
    let shift = log_mean(estimated) - log_mean(truth);
    estimated
        .iter()
        .zip(truth)
        .map(|(e, u)| (e.ln() - u.ln() - shift).exp_m1().abs())
        .fold(0.0, f64::max)
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Merits and a round robin of Bernoulli outcomes for one replica.
pub fn simulate_round_robin(
    t: usize,
    games_per_pair: u64,
    merit_range: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Array2<u64>) {
    let (lo, hi) = merit_range;
    let u: Vec<f64> = (0..t)
        .map(|_| if lo < hi { rng.random_range(lo..hi) } else { lo })
        .collect();
    let mut wins = Array2::zeros((t, t));
    for i in 0..t {
        for j in (i + 1)..t {
            let p = u[i] / (u[i] + u[j]);
            for _ in 0..games_per_pair {
                if rng.random_bool(p) {
                    wins[[i, j]] += 1;
                } else {
                    wins[[j, i]] += 1;
                }
            }
        }
    }
    (u, wins)
}

fn replica_rng(seed: u64, t: usize, replica: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((t as u64) << 32) | replica as u64);
    rng
}

/// Runs every replica for every `t`, fitting in parallel.
pub fn run_consistency(
    config: &ConsistencyConfig,
    solver: &SolverConfig,
) -> Result<ConsistencyReport> {
    config.validate()?;
    let mut summaries = Vec::with_capacity(config.t_grid.len());
    for &t in &config.t_grid {
        let epsilon = auto_epsilon(t);
        let spec = ModelSpec::improved(Model::BradleyTerry, epsilon);
        let teams: Vec<String> = (0..t).map(|i| format!("T{i}")).collect();
        let errors = (0..config.replicas)
            .into_par_iter()
            .map(|r| {
                let mut rng = replica_rng(config.seed, t, r);
                let (truth, wins) =
                    simulate_round_robin(t, config.games_per_pair, config.merit_range, &mut rng);
                let data = Dataset::from_win_matrix(teams.clone(), wins, None)?;
                let f = fit(&spec, &data, solver)?;
                Ok(max_relative_error(&f.merits, &truth))
            })
            .collect::<Result<Vec<f64>>>()?;
        summaries.push(ConsistencySummary {
            t,
            epsilon,
            median: quantile(&errors, 0.5),
            p90: quantile(&errors, 0.9),
            errors,
        });
    }
    Ok(ConsistencyReport {
        config: config.clone(),
        summaries,
    })
}
