//! Trajectory datasets, measurement windows, reconstruction maps from base
//! probes to the wake, and their composition with a full-measurement policy.

mod dataset;
mod model;
mod window;

pub use dataset::{
    collect_dataset, split_trajectories, DatasetMeta, Record, TrajectoryDataset, ACTION_DIM,
    DATA_MAGIC, SMALL_DATASET,
};
pub use model::{
    compose_policy, reconstruction_error, train_dsft, ComposedArtifact, DsftHyper, DsftModel,
    DsftReport, PdaController, RmseReport, COMPOSED_FORMAT, DSFT_FORMAT,
};
pub use window::{extract_windows, window_row, SupervisedSet, WindowSpec};
