use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::gaussian_noise;
use crate::seed;

use super::OptConfig;

/// Iterations without a better centre evaluation before warning.
const STAGNATION_WINDOW: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub iteration: usize,
    /// Mean return over the perturbed population.
    pub mean_return: f64,
    /// Best return within the perturbed population.
    pub best_return: f64,
    /// Drag reported by the evaluation of the unperturbed parameters.
    pub eval_drag: f64,
    /// Wall time since training started.
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<TrainLogRow>,
}

impl TrainLog {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
        for r in &self.rows {
            w.serialize(r)
                .map_err(|e| Error::format(path, e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Score of one parameter vector: the return being maximized and a drag
/// figure for logging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub ret: f64,
    pub drag: f64,
}

/// Which evaluation an objective call belongs to. Both members of an
/// antithetic pair share `pair`; the unperturbed centre has `pair = None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Probe {
    pub iteration: usize,
    pub pair: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsOutcome {
    /// Parameters with the best centre evaluation seen.
    pub params: Vec<f64>,
    pub best_return: f64,
    pub log: TrainLog,
}

/// Ranks mapped to `[-0.5, 0.5]`, tied values sharing their average rank.
pub fn centered_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg / (n - 1) as f64 - 0.5;
        }
        i = j + 1;
    }
    ranks
}

/// Gradient estimate from antithetic returns; `noise(j)` regenerates the
/// perturbation direction of pair `j`.
pub fn es_update(
    dim: usize,
    plus: &[f64],
    minus: &[f64],
    sigma: f64,
    noise: impl Fn(usize) -> Vec<f64>,
) -> Vec<f64> {
    let pairs = plus.len();
    let all: Vec<f64> = plus.iter().chain(minus).copied().collect();
    let ranks = centered_ranks(&all);
    let mut g = vec![0.0; dim];
    for j in 0..pairs {
        let w = ranks[j] - ranks[pairs + j];
        if w == 0.0 {
            continue;
        }
        for (gi, e) in g.iter_mut().zip(noise(j)) {
            *gi += w * e;
        }
    }
    let scale = 1.0 / (2.0 * pairs as f64 * sigma);
    g.iter_mut().for_each(|v| *v *= scale);
    g
}

/// Maximizes `objective` from `theta0` with antithetic evolution strategies.
pub fn es_optimize<F>(theta0: &[f64], cfg: &OptConfig, objective: F) -> Result<EsOutcome>
where
    F: Fn(&[f64], Probe) -> Result<Evaluation> + Sync,
{
    cfg.validate()?;
    let threads = cfg.parallel_envs.min(rayon::current_num_threads()).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::DimensionMismatch(format!("thread pool: {e}")))?;
    let dim = theta0.len();
    let pairs = cfg.population_pairs;
    let mut theta = theta0.to_vec();
    let mut best = (f64::NEG_INFINITY, theta.clone());
    let mut since_best = 0;
    let mut warned = false;
    let mut log = TrainLog::default();
    let start = Instant::now();
    let noise =
        |it: usize, j: usize| gaussian_noise(seed::derive(cfg.seed, it as u64, j as u64), dim);

    for it in 0..=cfg.iterations {
        let last = it == cfg.iterations;
        // Job 0 is the centre; jobs 2j+1 and 2j+2 are pair j at +/- sigma.
        let jobs = if last || cfg.sigma == 0.0 {
            1
        } else {
            1 + 2 * pairs
        };
        let evals = pool.install(|| {
            (0..jobs)
                .into_par_iter()
                .map(|job| {
                    if job == 0 {
                        return objective(
                            &theta,
                            Probe {
                                iteration: it,
                                pair: None,
                            },
                        );
                    }
                    let j = (job - 1) / 2;
                    let sign = if job % 2 == 1 { 1.0 } else { -1.0 };
                    let candidate: Vec<f64> = theta
                        .iter()
                        .zip(noise(it, j))
                        .map(|(t, e)| t + sign * cfg.sigma * e)
                        .collect();
                    objective(
                        &candidate,
                        Probe {
                            iteration: it,
                            pair: Some(j),
                        },
                    )
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let centre = evals[0];
        if !centre.ret.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: it,
                last_finite: best.0,
            });
        }
        if centre.ret > best.0 {
            best = (centre.ret, theta.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STAGNATION_WINDOW && !warned {
                log::warn!("no improvement in the last {STAGNATION_WINDOW} iterations");
                warned = true;
            }
        }
        if last {
            break;
        }
        let (plus, minus): (Vec<f64>, Vec<f64>) = if jobs > 1 {
            (
                (0..pairs).map(|j| evals[2 * j + 1].ret).collect(),
                (0..pairs).map(|j| evals[2 * j + 2].ret).collect(),
            )
        } else {
            (vec![centre.ret], vec![centre.ret])
        };
        let population: Vec<f64> = plus.iter().chain(&minus).copied().collect();
        log.rows.push(TrainLogRow {
            iteration: it,
            mean_return: crate::stats::mean(&population),
            best_return: population.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            eval_drag: centre.drag,
            seconds: start.elapsed().as_secs_f64(),
        });
        log::info!(
            "iteration {it}: centre return {:.5}, drag {:.4}",
            centre.ret,
            centre.drag
        );
        if jobs > 1 {
            let g = es_update(dim, &plus, &minus, cfg.sigma, |j| noise(it, j));
            for (t, gi) in theta.iter_mut().zip(&g) {
                *t += cfg.lr * gi;
            }
        }
    }
    Ok(EsOutcome {
        params: best.1,
        best_return: best.0,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(centered_ranks(&[3.0, 1.0, 2.0]), vec![0.5, -0.5, 0.0]);
        let r = centered_ranks(&[1.0, 5.0, 5.0, 0.0, 9.0]);
        assert_eq!(r, vec![-0.25, 0.125, 0.125, -0.5, 0.5]);
        assert_eq!(centered_ranks(&[4.0]), vec![0.0]);
    }

    #[test]
    fn monotone_transform_leaves_update_unchanged() {
        let plus = [0.3, -1.2, 2.5, 0.0];
        let minus = [1.1, 0.4, -0.7, 2.0];
        let noise = |j: usize| gaussian_noise(j as u64, 6);
        let g = es_update(6, &plus, &minus, 0.1, noise);
        let f = |v: &f64| 3.0 * v.powi(3) + 7.0;
        let tp: Vec<f64> = plus.iter().map(f).collect();
        let tm: Vec<f64> = minus.iter().map(f).collect();
        let h = es_update(6, &tp, &tm, 0.1, noise);
        assert!(g.iter().zip(&h).all(|(a, b)| (a - b).abs() <= 1e-12));
    }

    #[test]
    fn symmetric_pairs_give_zero_update() {
        let r = [0.5, -2.0, 1.5];
        let g = es_update(4, &r, &r, 0.2, |j| gaussian_noise(j as u64, 4));
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_sigma_keeps_parameters() {
        let cfg = OptConfig {
            sigma: 0.0,
            iterations: 5,
            ..OptConfig::default()
        };
        let theta0 = vec![0.3, -0.1];
        let out = es_optimize(&theta0, &cfg, |p, _| {
            Ok(Evaluation {
                ret: -p[0] * p[0],
                drag: 0.0,
            })
        })
        .unwrap();
        assert_eq!(out.params, theta0);
        assert_eq!(out.log.rows.len(), 5);
    }

    #[test]
    fn recovers_optimal_action_of_one_step_task() {
        use crate::nn::Normalizer;
        use crate::policy::{LinearTanhPolicy, Policy};

        let a0 = [0.0037, -0.0021];
        let base = Policy::Linear(LinearTanhPolicy::zeros(Normalizer::identity(1), 0.005));
        let act = |p: &[f64]| {
            let mut pol = base.clone();
            pol.set_params(p).unwrap();
            pol.act(&[1.0], [0.0; 2]).unwrap()
        };
        let cfg = OptConfig {
            iterations: 200,
            seed: 11,
            ..OptConfig::default()
        };
        let out = es_optimize(&base.params(), &cfg, |p, _| {
            let a = act(p);
            let d = (a[0] - a0[0]).powi(2) + (a[1] - a0[1]).powi(2);
            Ok(Evaluation { ret: -d, drag: d })
        })
        .unwrap();
        let a = act(&out.params);
        let err = ((a[0] - a0[0]).powi(2) + (a[1] - a0[1]).powi(2)).sqrt();
        assert!(err < 1e-3, "{a:?} err {err}");
    }

    #[test]
    fn reproducible() {
        let cfg = OptConfig {
            iterations: 10,
            population_pairs: 4,
            ..OptConfig::default()
        };
        let run = || {
            es_optimize(&[1.0, 2.0, 3.0], &cfg, |p, _| {
                Ok(Evaluation {
                    ret: -p.iter().map(|v| (v - 0.5).powi(2)).sum::<f64>(),
                    drag: 0.0,
                })
            })
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.params, b.params);
        assert_eq!(a.best_return, b.best_return);
    }
}
