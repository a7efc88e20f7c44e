//! Bounded feedback policies and the controllers that drive the environment
//! with them.

mod controller;
mod linear;
mod mlp;
mod window;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow_env::Action;
use crate::nn::{load_json, save_json, Normalizer};

pub use controller::{Controller, ObsSource, PolicyController, ZeroController};
pub use linear::LinearTanhPolicy;
pub use mlp::{MlpPolicy, MLP_HIDDEN};
pub use window::ObservationWindow;

pub const POLICY_FORMAT: &str = "pda-policy-v1";

/// Either policy class, behind one interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    Linear(LinearTanhPolicy),
    Mlp(MlpPolicy),
}

impl Policy {
    pub fn act(&self, obs: &[f64], prev_action: Action) -> Result<Action> {
        match self {
            Policy::Linear(p) => p.act(obs, prev_action),
            Policy::Mlp(p) => p.act(obs, prev_action),
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.normalizer().dim()
    }

    pub fn a_star(&self) -> f64 {
        match self {
            Policy::Linear(p) => p.a_star,
            Policy::Mlp(p) => p.a_star,
        }
    }

    pub fn normalizer(&self) -> &Normalizer {
        match self {
            Policy::Linear(p) => &p.obs_normalizer,
            Policy::Mlp(p) => &p.obs_normalizer,
        }
    }

    pub fn num_params(&self) -> usize {
        match self {
            Policy::Linear(p) => p.num_params(),
            Policy::Mlp(p) => p.net.num_params(),
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Policy::Linear(p) => p.params(),
            Policy::Mlp(p) => p.net.params(),
        }
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        match self {
            Policy::Linear(p) => p.set_params(params),
            Policy::Mlp(p) => p.net.set_params(params),
        }
    }

    /// Copy with seeded Gaussian noise of standard deviation `sigma` added to
    /// every parameter. The noise is [`gaussian_noise`]`(seed, num_params)`.
    pub fn perturb(&self, seed: u64, sigma: f64) -> Result<Self> {
        let mut out = self.clone();
        if sigma == 0.0 {
            return Ok(out);
        }
        let eps = gaussian_noise(seed, self.num_params());
        let params: Vec<f64> = self
            .params()
            .iter()
            .zip(&eps)
            .map(|(p, e)| p + sigma * e)
            .collect();
        out.set_params(&params)?;
        Ok(out)
    }
}

/// A policy together with the observation source it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyArtifact {
    pub source: ObsSource,
    pub policy: Policy,
}

impl PolicyArtifact {
    pub fn controller(&self, pm_dim: usize) -> PolicyController {
        PolicyController::new(self.policy.clone(), self.source, pm_dim)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_json(path, POLICY_FORMAT, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        load_json(path, POLICY_FORMAT)
    }
}

/// `len` standard normal draws from a ChaCha stream keyed by `seed`.
pub fn gaussian_noise(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}
