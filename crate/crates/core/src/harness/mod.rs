//! Evaluation protocols: single episodes, phase-offset ensembles, history
//! sweeps and policy comparisons.

mod compare;
mod ensemble;
mod episode;
mod sweep;

pub use compare::{
    compare_baselines, write_comparison_csv, write_field_csv, Candidate, ComparisonRow,
    PolicyResult,
};
pub use ensemble::{run_ensemble, EnsembleStats};
pub use episode::{last100_mean, run_episode, EpisodeRecord, StepRecord, TAIL};
pub use sweep::{sweep_history, EvalPlan, SweepRow, SweepTable};
