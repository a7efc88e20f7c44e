use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow_env::FlowField;
use crate::policy::Controller;

use super::ensemble::{run_ensemble, EnsembleStats};
use super::episode::EpisodeRecord;
use super::sweep::{write_rows, EvalPlan};

/// Comparison CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub policy: String,
    pub mean_last100: f64,
    pub min_last100: f64,
    pub max_last100: f64,
    pub runs: usize,
}

/// Result for one compared policy.
#[derive(Debug, Clone)]
pub struct PolicyResult {
    pub row: ComparisonRow,
    pub stats: EnsembleStats,
    /// Episode of the first run.
    pub first_run: EpisodeRecord,
    /// Pressure field at the end of the first run.
    pub final_pressure: Vec<f64>,
}

/// A named controller factory.
pub struct Candidate<'a> {
    pub name: String,
    pub make: Box<dyn Fn() -> Box<dyn Controller> + Sync + 'a>,
}

impl<'a> Candidate<'a> {
    pub fn new<C: Controller + 'static>(
        name: impl Into<String>,
        make: impl Fn() -> C + Sync + 'a,
    ) -> Self {
        Self {
            name: name.into(),
            make: Box::new(move || Box::new(make()) as Box<dyn Controller>),
        }
    }
}

/// Evaluates every candidate on the same ensemble; one result per candidate,
/// in order.
pub fn compare_baselines(
    plan: &EvalPlan<'_>,
    candidates: &[Candidate<'_>],
) -> Result<Vec<PolicyResult>> {
    candidates
        .iter()
        .map(|c| {
            let (stats, records) = run_ensemble(
                plan.env,
                plan.starts,
                || (c.make)(),
                plan.episode_steps,
                plan.base_seed,
                &c.name,
            )?;
            let final_pressure = final_field(plan, &mut (c.make)())?.pressure_grid();
            let (lo, hi) = stats.min_max_last100();
            Ok(PolicyResult {
                row: ComparisonRow {
                    policy: c.name.clone(),
                    mean_last100: stats.mean_last100(),
                    min_last100: lo,
                    max_last100: hi,
                    runs: stats.runs(),
                },
                stats,
                first_run: records.into_iter().next().expect("at least one run"),
                final_pressure,
            })
        })
        .collect()
}

/// Reruns the first ensemble member and returns its final field.
fn final_field(plan: &EvalPlan<'_>, controller: &mut dyn Controller) -> Result<FlowField> {
    let env = plan.env;
    let mut state = env.reset(Some(&plan.starts[0]))?;
    controller.reset();
    let mut obs = env.observe(&state)?;
    for _ in 0..plan.episode_steps {
        let a = controller.act(&obs, state.prev_action)?;
        obs = env.step(&mut state, a)?.observation();
    }
    Ok(state.field)
}

pub fn write_comparison_csv(path: &Path, results: &[PolicyResult]) -> Result<()> {
    let rows: Vec<ComparisonRow> = results.iter().map(|r| r.row.clone()).collect();
    write_rows(path, &rows)
}

/// `nx,ny` header line, their values, then one line of `nx` pressures per
/// lattice row, bottom row first.
pub fn write_field_csv(path: &Path, nx: usize, ny: usize, pressure: &[f64]) -> Result<()> {
    assert_eq!(pressure.len(), nx * ny, "pressure grid size");
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "nx,ny")?;
    writeln!(out, "{nx},{ny}")?;
    for row in pressure.chunks(nx) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}
