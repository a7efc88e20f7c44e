use crate::error::{Error, Result};
use crate::flow_env::{FlowEnv, FlowField};
use crate::harness::run_episode;
use crate::policy::{Controller, ObsSource, Policy, PolicyController};
use crate::stats::mean;

use super::es::{es_optimize, Evaluation, Probe, TrainLog};
use super::OptConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    /// Mean over episodes of `sum_t gamma^t r_t`.
    pub mean_return: f64,
    /// Mean drag over the second half of each episode, averaged.
    pub mean_drag: f64,
}

/// Runs `episodes` episodes; episode `e` starts from
/// `starts[(seed + e) % starts.len()]`.
pub fn evaluate_return(
    env: &FlowEnv,
    starts: &[FlowField],
    controller: &mut dyn Controller,
    episodes: usize,
    episode_steps: usize,
    gamma: f64,
    seed: u64,
) -> Result<EvalSummary> {
    if starts.is_empty() {
        return Err(Error::TooShort {
            len: 0,
            required: 1,
        });
    }
    if episode_steps == 0 || episodes == 0 {
        return Err(Error::TooShort {
            len: 0,
            required: 1,
        });
    }
    let mut returns = Vec::with_capacity(episodes);
    let mut drags = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let start = &starts[(seed as usize).wrapping_add(e) % starts.len()];
        let rec = run_episode(env, start, controller, episode_steps, seed, "eval")?;
        returns.push(rec.discounted_return(gamma));
        let drag = rec.drag();
        drags.push(mean(&drag[drag.len() / 2..]));
    }
    Ok(EvalSummary {
        mean_return: mean(&returns),
        mean_drag: mean(&drags),
    })
}

/// Trains `initial` with evolution strategies on episodes that start from
/// the given phase-offset snapshots. Returns the best centre policy.
///
/// Both members of an antithetic pair see the same starts; the centre is
/// scored on every start so its scores are comparable across iterations.
pub fn es_train(
    initial: &Policy,
    source: ObsSource,
    env: &FlowEnv,
    starts: &[FlowField],
    cfg: &OptConfig,
) -> Result<(Policy, TrainLog)> {
    let want = source.dim(env.fm_dim(), env.pm_dim());
    if initial.obs_dim() != want {
        return Err(Error::shape("policy input", want, initial.obs_dim()));
    }
    if starts.is_empty() {
        return Err(Error::TooShort {
            len: 0,
            required: 1,
        });
    }
    let objective = |params: &[f64], probe: Probe| -> Result<Evaluation> {
        let mut policy = initial.clone();
        policy.set_params(params)?;
        let mut c = PolicyController::new(policy, source, env.pm_dim());
        let (episodes, offset) = match probe.pair {
            None => (starts.len(), 0),
            Some(j) => (
                cfg.episodes_per_eval,
                crate::seed::derive(cfg.seed ^ 0x5eed, probe.iteration as u64, j as u64),
            ),
        };
        let s = evaluate_return(
            env,
            starts,
            &mut c,
            episodes,
            cfg.episode_steps,
            cfg.gamma,
            offset % starts.len() as u64,
        )?;
        Ok(Evaluation {
            ret: s.mean_return,
            drag: s.mean_drag,
        })
    };
    let out = es_optimize(&initial.params(), cfg, objective)?;
    let mut policy = initial.clone();
    policy.set_params(&out.params)?;
    Ok((policy, out.log))
}
