use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_env::{Action, Observation};
use crate::nn::{load_json, save_json, AdamConfig, AdamState, DenseNet, Normalizer};
use crate::policy::{Controller, ObservationWindow, Policy};

use super::dataset::{split_trajectories, TrajectoryDataset};
use super::window::{extract_windows, SupervisedSet, WindowSpec};

pub const DSFT_FORMAT: &str = "pda-dsft-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DsftHyper {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Fraction of trajectories held out for validation.
    pub heldout_fraction: f64,
    pub seed: u64,
}

impl Default for DsftHyper {
    fn default() -> Self {
        Self {
            epochs: 10_000,
            lr: 1e-3,
            batch_size: 10_000,
            heldout_fraction: 0.1,
            seed: 0,
        }
    }
}

impl DsftHyper {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::constraint("epochs", "must be at least 1"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::constraint("lr", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::constraint("batch_size", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.heldout_fraction) {
            return Err(Error::constraint("heldout_fraction", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Reconstruction map from a measurement window to the wake probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DsftModel {
    pub net: DenseNet,
    pub window: WindowSpec,
    pub input_norm: Normalizer,
    pub target_norm: Normalizer,
}

impl DsftModel {
    pub fn architecture(&self) -> Vec<usize> {
        self.net.hidden_sizes()
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.net.output_dim()
    }

    /// Raw wake-probe estimate from a raw window vector.
    pub fn predict(&self, window: &[f64]) -> Result<Vec<f64>> {
        let z = self.input_norm.apply(window)?;
        self.target_norm.invert(&self.net.forward(&z)?)
    }

    pub fn predict_batch(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let z = self.input_norm.apply_batch(x.view())?;
        let out = self.net.forward_batch(z.view())?;
        self.target_norm.invert_batch(out.view())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_json(path, DSFT_FORMAT, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        load_json(path, DSFT_FORMAT)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsftReport {
    /// Mean squared error per element, in normalized units.
    pub train_mse: f64,
    /// `None` when no trajectory was held out.
    pub heldout_mse: Option<f64>,
    pub epochs: usize,
    /// Training MSE after each epoch.
    pub history: Vec<f64>,
}

fn rows(a: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    a.select(Axis(0), idx)
}

fn mse(net: &DenseNet, x: &Array2<f64>, y: &Array2<f64>) -> Result<f64> {
    Ok(net.loss(x.view(), y.view())? / y.ncols() as f64)
}

/// Minibatch Adam on the normalized mean squared reconstruction error.
/// The trajectories picked by
/// [`split_trajectories`]`(k, heldout_fraction, seed)` are held out for
/// validation.
pub fn train_dsft(
    set: &SupervisedSet,
    hidden: &[usize],
    hyper: &DsftHyper,
) -> Result<(DsftModel, DsftReport)> {
    hyper.validate()?;
    if set.is_empty() {
        return Err(Error::TooShort {
            len: 0,
            required: 1,
        });
    }
    let x = set.input_norm.apply_batch(set.x.view())?;
    let y = set.target_norm.apply_batch(set.y.view())?;

    let k = set.trajectory.iter().max().map_or(0, |m| m + 1);
    let (_, held) = split_trajectories(k, hyper.heldout_fraction, hyper.seed);
    let mut is_held = vec![false; k];
    held.iter().for_each(|&i| is_held[i] = true);
    let (mut train_idx, mut held_idx) = (Vec::new(), Vec::new());
    for (r, &tr) in set.trajectory.iter().enumerate() {
        if is_held[tr] {
            held_idx.push(r);
        } else {
            train_idx.push(r);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let (xt, yt) = (rows(&x, &train_idx), rows(&y, &train_idx));
    let held_xy = (!held_idx.is_empty()).then(|| (rows(&x, &held_idx), rows(&y, &held_idx)));

    let mut net = DenseNet::new(x.ncols(), hidden, y.ncols(), hyper.seed);
    let mut adam = AdamState::new(
        &net,
        AdamConfig {
            lr: hyper.lr,
            ..AdamConfig::default()
        },
    );
    let mut order: Vec<usize> = (0..xt.nrows()).collect();
    let mut history = Vec::with_capacity(hyper.epochs);
    let full_batch = hyper.batch_size >= order.len();
    for epoch in 0..hyper.epochs {
        if full_batch {
            let (_, g) = net.grad(xt.view(), yt.view())?;
            adam.step(&mut net, &g)?;
        } else {
            order.shuffle(&mut rng);
            for chunk in order.chunks(hyper.batch_size) {
                let (bx, by) = (rows(&xt, chunk), rows(&yt, chunk));
                let (_, g) = net.grad(bx.view(), by.view())?;
                adam.step(&mut net, &g)?;
            }
        }
        let loss = mse(&net, &xt, &yt)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                last_finite: history.last().copied().unwrap_or(f64::NAN),
            });
        }
        history.push(loss);
    }
    let heldout_mse = held_xy
        .as_ref()
        .map(|(hx, hy)| mse(&net, hx, hy))
        .transpose()?;
    let report = DsftReport {
        train_mse: *history.last().expect("at least one epoch"),
        heldout_mse,
        epochs: hyper.epochs,
        history,
    };
    let model = DsftModel {
        net,
        window: set.spec,
        input_norm: set.input_norm.clone(),
        target_norm: set.target_norm.clone(),
    };
    Ok((model, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    /// Per wake probe, in raw pressure units.
    pub per_probe: Vec<f64>,
    pub aggregate: f64,
}

/// Reconstruction RMSE of `model` over every complete window of `data`.
pub fn reconstruction_error(model: &DsftModel, data: &TrajectoryDataset) -> Result<RmseReport> {
    let set = extract_windows(data, model.window)?;
    if set.y.ncols() != model.output_dim() {
        return Err(Error::shape(
            "wake probes",
            model.output_dim(),
            set.y.ncols(),
        ));
    }
    let pred = model.predict_batch(&set.x)?;
    let n = set.len() as f64;
    let per_probe: Vec<f64> = (0..set.y.ncols())
        .map(|j| {
            let se: f64 = pred
                .column(j)
                .iter()
                .zip(set.y.column(j))
                .map(|(p, t)| (p - t) * (p - t))
                .sum();
            (se / n).sqrt()
        })
        .collect();
    let aggregate = (per_probe.iter().map(|r| r * r).sum::<f64>() / per_probe.len() as f64).sqrt();
    Ok(RmseReport {
        per_probe,
        aggregate,
    })
}

/// Partial-measurement controller `pi*(T(window), a_{t-1})`.
#[derive(Debug, Clone)]
pub struct PdaController {
    policy: Policy,
    model: DsftModel,
    window: ObservationWindow,
}

impl PdaController {
    pub fn model(&self) -> &DsftModel {
        &self.model
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    /// Action for the current buffer contents.
    pub fn act_on_window(&self, window: &[f64], prev_action: Action) -> Result<Action> {
        let estimate = self.model.predict(window)?;
        self.policy.act(&estimate, prev_action)
    }
}

impl Controller for PdaController {
    fn reset(&mut self) {
        self.window.clear();
    }

    fn act(&mut self, obs: &Observation, prev_action: Action) -> Result<Action> {
        self.window.push(&obs.o_pm, prev_action)?;
        self.act_on_window(&self.window.vector(), prev_action)
    }
}

pub fn compose_policy(pi_star: Policy, model: DsftModel) -> Result<PdaController> {
    if model.output_dim() != pi_star.obs_dim() {
        return Err(Error::DimensionMismatch(format!(
            "reconstruction emits {} values but the policy observes {}",
            model.output_dim(),
            pi_star.obs_dim()
        )));
    }
    let spec = model.window;
    let width = model.input_dim();
    let fixed = spec.input_width(0);
    if width < fixed || !(width - fixed).is_multiple_of(spec.n + 1) {
        return Err(Error::DimensionMismatch(format!(
            "reconstruction input width {width} does not fit window n={}, m={}",
            spec.n, spec.m
        )));
    }
    let pm_dim = (width - fixed) / (spec.n + 1);
    Ok(PdaController {
        window: ObservationWindow::new(spec.n, spec.m, pm_dim),
        policy: pi_star,
        model,
    })
}

pub const COMPOSED_FORMAT: &str = "pda-composed-v1";

/// A full-measurement policy and the reconstruction map feeding it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposedArtifact {
    pub policy: Policy,
    pub model: DsftModel,
}

impl ComposedArtifact {
    pub fn controller(&self) -> Result<PdaController> {
        compose_policy(self.policy.clone(), self.model.clone())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_json(path, COMPOSED_FORMAT, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        load_json(path, COMPOSED_FORMAT)
    }
}
