//! Policy domain adaptation for an actuated bluff-body wake: a lattice
//! Boltzmann environment, dense networks, evolution-strategy policy search,
//! reconstruction of wake probes from base-probe histories, and the
//! evaluation protocols built on them.

pub mod dsft;
pub mod error;
pub mod flow_env;
pub mod harness;
pub mod nn;
pub mod policy;
pub mod policy_opt;
pub mod seed;
pub mod stats;

pub use dsft::{DsftHyper, DsftModel, PdaController, TrajectoryDataset, WindowSpec};
pub use error::{Error, Result};
pub use flow_env::{Action, BaselineStats, FlowEnv, FlowField, LatticeConfig, Observation};
pub use harness::{EnsembleStats, EpisodeRecord, SweepTable};
pub use nn::{DenseNet, Normalizer};
pub use policy::{Controller, ObsSource, Policy, PolicyArtifact};
pub use policy_opt::{OptConfig, TrainLog};
