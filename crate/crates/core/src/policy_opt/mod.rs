//! Antithetic evolution strategies over policy parameters.

mod es;
mod evaluate;

pub use es::{centered_ranks, es_optimize, es_update, EsOutcome, TrainLog, TrainLogRow};
pub use evaluate::{es_train, evaluate_return, EvalSummary};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptConfig {
    /// Antithetic pairs per iteration.
    pub population_pairs: usize,
    pub sigma: f64,
    pub lr: f64,
    pub iterations: usize,
    pub episodes_per_eval: usize,
    pub episode_steps: usize,
    pub gamma: f64,
    /// Upper bound on concurrently simulated environments.
    pub parallel_envs: usize,
    /// Phase-offset start states used for training episodes.
    pub train_starts: usize,
    pub seed: u64,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            population_pairs: 16,
            sigma: 0.05,
            lr: 0.02,
            iterations: 300,
            episodes_per_eval: 1,
            episode_steps: 400,
            gamma: 0.99,
            parallel_envs: 65,
            train_starts: 4,
            seed: 0,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("population_pairs", self.population_pairs),
            ("iterations", self.iterations),
            ("episodes_per_eval", self.episodes_per_eval),
            ("episode_steps", self.episode_steps),
            ("parallel_envs", self.parallel_envs),
            ("train_starts", self.train_starts),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::constraint(key, "must be at least 1"));
            }
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::constraint("sigma", "must be non-negative"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::constraint("lr", "must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::constraint("gamma", "must lie in (0, 1]"));
        }
        Ok(())
    }
}
