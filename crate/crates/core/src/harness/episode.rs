use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_env::{FlowEnv, FlowField};
use crate::policy::Controller;

/// Length of the closing window used for drag statistics.
pub const TAIL: usize = 100;

/// One control step of an episode; also the episode CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub drag: f64,
    pub lift: f64,
    pub reward: f64,
    pub a1: f64,
    pub a2: f64,
    pub q1: f64,
    pub q2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub steps: Vec<StepRecord>,
    pub seed: u64,
    pub policy_id: String,
}

impl EpisodeRecord {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn drag(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.drag).collect()
    }

    pub fn lift(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.lift).collect()
    }

    pub fn last100_mean(&self) -> Result<f64> {
        last100_mean(&self.drag())
    }

    /// `sum_t gamma^t r_t`.
    pub fn discounted_return(&self, gamma: f64) -> f64 {
        let mut weight = 1.0;
        let mut total = 0.0;
        for s in &self.steps {
            total += weight * s.reward;
            weight *= gamma;
        }
        total
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
        for s in &self.steps {
            w.serialize(s)
                .map_err(|e| Error::format(path, e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean of the final hundred values.
pub fn last100_mean(series: &[f64]) -> Result<f64> {
    if series.len() < TAIL {
        return Err(Error::TooShort {
            len: series.len(),
            required: TAIL,
        });
    }
    let tail = &series[series.len() - TAIL..];
    Ok(tail.iter().sum::<f64>() / TAIL as f64)
}

/// Runs `controller` for `steps` control steps from `start`.
pub fn run_episode(
    env: &FlowEnv,
    start: &FlowField,
    controller: &mut dyn Controller,
    steps: usize,
    seed: u64,
    policy_id: &str,
) -> Result<EpisodeRecord> {
    let mut state = env.reset(Some(start))?;
    controller.reset();
    let mut obs = env.observe(&state)?;
    let mut records = Vec::with_capacity(steps);
    for step in 0..steps {
        let action = controller.act(&obs, state.prev_action)?;
        let out = env.step(&mut state, action)?;
        let [a1, a2] = state.prev_action;
        let [q1, q2] = state.jets.q;
        records.push(StepRecord {
            step,
            drag: out.drag_coeff,
            lift: out.lift_coeff,
            reward: out.reward,
            a1,
            a2,
            q1,
            q2,
        });
        obs = out.observation();
    }
    Ok(EpisodeRecord {
        steps: records,
        seed,
        policy_id: policy_id.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last100_of_ramp() {
        let series: Vec<f64> = (1..=400).map(f64::from).collect();
        assert_eq!(last100_mean(&series).unwrap(), 350.5);
        assert_eq!(last100_mean(&[2.5; 150]).unwrap(), 2.5);
        assert!(matches!(
            last100_mean(&[1.0; 99]),
            Err(Error::TooShort {
                len: 99,
                required: 100
            })
        ));
    }

    #[test]
    fn last100_matches_direct_slice_mean() {
        let series: Vec<f64> = (0..257)
            .map(|i| (i as f64 * 0.37).sin() * 1e3 + 0.1)
            .collect();
        let direct = series[157..].iter().sum::<f64>() / 100.0;
        assert!((last100_mean(&series).unwrap() - direct).abs() <= 1e-15 * direct.abs().max(1.0));
    }

    #[test]
    fn discounting() {
        let rec = EpisodeRecord {
            steps: (0..3)
                .map(|i| StepRecord {
                    step: i,
                    drag: 1.0,
                    lift: 0.0,
                    reward: -(i as f64 + 1.0),
                    a1: 0.0,
                    a2: 0.0,
                    q1: 0.0,
                    q2: 0.0,
                })
                .collect(),
            seed: 0,
            policy_id: "t".into(),
        };
        assert_eq!(rec.discounted_return(0.0), -1.0);
        assert_eq!(rec.discounted_return(1.0), -6.0);
        assert_eq!(rec.discounted_return(0.5), -1.0 - 1.0 - 0.75);
    }
}
