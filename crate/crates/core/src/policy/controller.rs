use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_env::{Action, Observation};
use crate::nn::Normalizer;

use super::window::ObservationWindow;
use super::Policy;

/// Closed-loop decision rule driven one control step at a time.
pub trait Controller: Send {
    /// Forgets any history before a new episode.
    fn reset(&mut self);

    /// Action for the observation at `t`, given the action applied at `t - 1`.
    fn act(&mut self, obs: &Observation, prev_action: Action) -> Result<Action>;
}

impl<C: Controller + ?Sized> Controller for Box<C> {
    fn reset(&mut self) {
        (**self).reset()
    }

    fn act(&mut self, obs: &Observation, prev_action: Action) -> Result<Action> {
        (**self).act(obs, prev_action)
    }
}

/// No actuation.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroController;

impl Controller for ZeroController {
    fn reset(&mut self) {}

    fn act(&mut self, _: &Observation, _: Action) -> Result<Action> {
        Ok([0.0; 2])
    }
}

/// What a policy sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObsSource {
    /// Wake probes at the current step.
    Full,
    /// Base-probe history of `n + 1` readings and `m` past actions.
    PartialHistory { n: usize, m: usize },
}

impl ObsSource {
    pub fn dim(&self, fm_dim: usize, pm_dim: usize) -> usize {
        match *self {
            ObsSource::Full => fm_dim,
            ObsSource::PartialHistory { n, m } => (n + 1) * pm_dim + 2 * m,
        }
    }

    /// Input normalizer for this source: the wake statistics as given, or the
    /// base statistics tiled over the history with actions scaled by `a_star`.
    pub fn normalizer(&self, fm: &Normalizer, pm: &Normalizer, a_star: f64) -> Result<Normalizer> {
        match *self {
            ObsSource::Full => Ok(fm.clone()),
            ObsSource::PartialHistory { n, m } => {
                let mut mean = Vec::new();
                let mut std = Vec::new();
                for _ in 0..=n {
                    mean.extend_from_slice(&pm.mean);
                    std.extend_from_slice(&pm.std);
                }
                mean.extend(std::iter::repeat_n(0.0, 2 * m));
                std.extend(std::iter::repeat_n(a_star, 2 * m));
                Normalizer::from_stats(mean, std)
            }
        }
    }
}

/// A policy fed from one observation source.
#[derive(Debug, Clone)]
pub struct PolicyController {
    policy: Policy,
    source: ObsSource,
    window: Option<ObservationWindow>,
}

impl PolicyController {
    pub fn new(policy: Policy, source: ObsSource, pm_dim: usize) -> Self {
        let window = match source {
            ObsSource::Full => None,
            ObsSource::PartialHistory { n, m } => Some(ObservationWindow::new(n, m, pm_dim)),
        };
        Self {
            policy,
            source,
            window,
        }
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn source(&self) -> ObsSource {
        self.source
    }
}

impl Controller for PolicyController {
    fn reset(&mut self) {
        if let Some(w) = &mut self.window {
            w.clear();
        }
    }

    fn act(&mut self, obs: &Observation, prev_action: Action) -> Result<Action> {
        match &mut self.window {
            None => self.policy.act(&obs.o_fm, prev_action),
            Some(w) => {
                w.push(&obs.o_pm, prev_action)?;
                let x = w.vector();
                if x.len() != self.policy.obs_dim() {
                    return Err(Error::shape(
                        "history input",
                        self.policy.obs_dim(),
                        x.len(),
                    ));
                }
                self.policy.act(&x, prev_action)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::LinearTanhPolicy;

    #[test]
    fn history_normalizer_layout() {
        let pm = Normalizer::from_stats(vec![1.0, 2.0], vec![0.5, 0.25]).unwrap();
        let fm = Normalizer::identity(3);
        let src = ObsSource::PartialHistory { n: 1, m: 2 };
        let z = src.normalizer(&fm, &pm, 0.01).unwrap();
        assert_eq!(z.mean, vec![1.0, 2.0, 1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(z.std, vec![0.5, 0.25, 0.5, 0.25, 0.01, 0.01, 0.01, 0.01]);
        assert_eq!(src.dim(3, 2), 8);
        assert_eq!(ObsSource::Full.normalizer(&fm, &pm, 0.01).unwrap(), fm);
    }

    #[test]
    fn history_controller_uses_base_probes() {
        let norm = Normalizer::identity(4);
        let mut p = LinearTanhPolicy::zeros(norm, 1.0);
        // Responds to the newest base reading only.
        p.a[[0, 2]] = 1.0;
        let mut c = PolicyController::new(
            Policy::Linear(p),
            ObsSource::PartialHistory { n: 1, m: 0 },
            2,
        );
        let obs = |v: f64| Observation {
            o_fm: vec![100.0; 5],
            o_pm: vec![v, 0.0],
        };
        let a = c.act(&obs(0.5), [0.0; 2]).unwrap();
        assert!((a[0] - 0.5f64.tanh()).abs() < 1e-15);
        let a = c.act(&obs(-0.25), a).unwrap();
        assert!((a[0] + 0.25f64.tanh()).abs() < 1e-15);
    }
}
