use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_env::{FlowEnv, FlowField};
use crate::policy::Controller;
use crate::stats::min_max;

use super::episode::{run_episode, EpisodeRecord};
use super::sweep::write_rows;

#[derive(Serialize)]
struct SeriesRow {
    step: usize,
    mean: f64,
    min: f64,
    max: f64,
}

/// Pointwise drag statistics across the runs of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Last-100 mean drag of each run, in run order.
    pub last100: Vec<f64>,
}

impl EnsembleStats {
    pub fn from_series(series: &[Vec<f64>]) -> Result<Self> {
        let first = series.first().ok_or(Error::TooShort {
            len: 0,
            required: 1,
        })?;
        let len = first.len();
        if let Some(bad) = series.iter().find(|s| s.len() != len) {
            return Err(Error::shape("ensemble series", len, bad.len()));
        }
        let runs = series.len() as f64;
        let mut mean = vec![0.0; len];
        let mut min = vec![f64::INFINITY; len];
        let mut max = vec![f64::NEG_INFINITY; len];
        for s in series {
            for t in 0..len {
                mean[t] += s[t];
                min[t] = min[t].min(s[t]);
                max[t] = max[t].max(s[t]);
            }
        }
        mean.iter_mut().for_each(|m| *m /= runs);
        let last100 = series
            .iter()
            .map(|s| super::last100_mean(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mean,
            min,
            max,
            last100,
        })
    }

    pub fn runs(&self) -> usize {
        self.last100.len()
    }

    pub fn mean_last100(&self) -> f64 {
        crate::stats::mean(&self.last100)
    }

    pub fn min_max_last100(&self) -> (f64, f64) {
        min_max(&self.last100)
    }

    /// `step,mean,min,max` rows, one per control step.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<SeriesRow> = (0..self.mean.len())
            .map(|t| SeriesRow {
                step: t,
                mean: self.mean[t],
                min: self.min[t],
                max: self.max[t],
            })
            .collect();
        write_rows(path, &rows)
    }

    /// Largest pointwise band width over `range` of steps.
    pub fn band_width(&self, range: std::ops::Range<usize>) -> f64 {
        range.map(|t| self.max[t] - self.min[t]).fold(0.0, f64::max)
    }
}

/// Runs one episode per start field; run `r` uses `starts[r]` and seed
/// `base_seed + r`.
pub fn run_ensemble<C, F>(
    env: &FlowEnv,
    starts: &[FlowField],
    make_controller: F,
    steps: usize,
    base_seed: u64,
    policy_id: &str,
) -> Result<(EnsembleStats, Vec<EpisodeRecord>)>
where
    C: Controller,
    F: Fn() -> C + Sync,
{
    if starts.is_empty() {
        return Err(Error::TooShort {
            len: 0,
            required: 1,
        });
    }
    let records = starts
        .par_iter()
        .enumerate()
        .map(|(r, start)| {
            let mut c = make_controller();
            run_episode(env, start, &mut c, steps, base_seed + r as u64, policy_id)
        })
        .collect::<Result<Vec<_>>>()?;
    let series: Vec<Vec<f64>> = records.iter().map(EpisodeRecord::drag).collect();
    Ok((EnsembleStats::from_series(&series)?, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(seed: usize) -> Vec<Vec<f64>> {
        (0..5)
            .map(|r| {
                (0..120)
                    .map(|t| ((t * (r + seed + 1)) as f64 * 0.1).sin() + r as f64 * 0.01)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn single_run_band_collapses() {
        let s = vec![series(0).remove(2)];
        let st = EnsembleStats::from_series(&s).unwrap();
        assert_eq!(st.mean, st.min);
        assert_eq!(st.max, st.min);
    }

    #[test]
    fn mean_lies_within_band() {
        let st = EnsembleStats::from_series(&series(3)).unwrap();
        for t in 0..st.mean.len() {
            assert!(st.min[t] <= st.mean[t] && st.mean[t] <= st.max[t]);
        }
    }

    #[test]
    fn run_order_does_not_matter() {
        let s = series(1);
        let mut rev = s.clone();
        rev.reverse();
        let (a, b) = (
            EnsembleStats::from_series(&s).unwrap(),
            EnsembleStats::from_series(&rev).unwrap(),
        );
        assert_eq!(a.min, b.min);
        assert_eq!(a.max, b.max);
        for (x, y) in a.mean.iter().zip(&b.mean) {
            assert!((x - y).abs() < 1e-15);
        }
        let mut l = b.last100.clone();
        l.reverse();
        assert_eq!(a.last100, l);
    }

    #[test]
    fn ragged_rejected() {
        let mut s = series(0);
        s[1].pop();
        assert!(EnsembleStats::from_series(&s).is_err());
    }
}
