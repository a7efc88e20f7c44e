use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsft::{
    compose_policy, extract_windows, train_dsft, DsftHyper, TrajectoryDataset, WindowSpec,
};
use crate::error::{Error, Result};
use crate::flow_env::{FlowEnv, FlowField};
use crate::policy::Policy;

use super::ensemble::run_ensemble;

/// One `(n, m)` cell; also the sweep CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub m: usize,
    pub mean_last100: f64,
    pub min_last100: f64,
    pub max_last100: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn get(&self, n: usize, m: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.n == n && r.m == m)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_rows(path, &self.rows)
    }
}

pub(crate) fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::format(path, e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Evaluation settings shared by sweeps and comparisons.
#[derive(Debug, Clone)]
pub struct EvalPlan<'a> {
    pub env: &'a FlowEnv,
    /// One start per ensemble run.
    pub starts: &'a [FlowField],
    pub episode_steps: usize,
    pub base_seed: u64,
}

/// Trains one reconstruction map per `(n, m)` on `dataset`, composes each
/// with the fixed `pi_star`, and evaluates the result. The environment is
/// used only for evaluation.
pub fn sweep_history(
    plan: &EvalPlan<'_>,
    pi_star: &Policy,
    dataset: &TrajectoryDataset,
    n_values: &[usize],
    m_values: &[usize],
    hidden: &[usize],
    hyper: &DsftHyper,
) -> Result<SweepTable> {
    let longest = n_values.iter().chain(m_values).copied().max().unwrap_or(0);
    if dataset.horizon() < longest {
        return Err(Error::WindowTooLong {
            n: n_values.iter().copied().max().unwrap_or(0),
            m: m_values.iter().copied().max().unwrap_or(0),
            horizon: dataset.horizon(),
        });
    }
    let cells: Vec<(usize, usize)> = n_values
        .iter()
        .flat_map(|&n| m_values.iter().map(move |&m| (n, m)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(n, m)| {
            let set = extract_windows(dataset, WindowSpec::new(n, m))?;
            let (model, report) = train_dsft(&set, hidden, hyper)?;
            log::info!(
                "sweep n={n} m={m}: train mse {:.4e}, held-out {:?}",
                report.train_mse,
                report.heldout_mse
            );
            let controller = compose_policy(pi_star.clone(), model)?;
            let (stats, _) = run_ensemble(
                plan.env,
                plan.starts,
                || controller.clone(),
                plan.episode_steps,
                plan.base_seed,
                &format!("pda_n{n}_m{m}"),
            )?;
            let (lo, hi) = stats.min_max_last100();
            Ok(SweepRow {
                n,
                m,
                mean_last100: stats.mean_last100(),
                min_last100: lo,
                max_last100: hi,
                runs: stats.runs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { rows })
}
