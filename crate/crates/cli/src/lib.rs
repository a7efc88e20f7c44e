//! Configuration, artifact layout and the `pda` command-line pipeline:
//! baseline flow, policy training, data collection, reconstruction maps,
//! composition and evaluation.

pub mod app;
pub mod config;
pub mod layout;
pub mod manifest;
pub mod pipeline;

pub use app::{run, Cli, Command};
pub use config::{load_config, DsftSection, HarnessSection, RunConfig, OUTPUT_ENV};
pub use layout::{arch_tag, parse_arch, Layout, PolicyKind};
pub use manifest::{sha256_file, Manifest, Recorder};
pub use pipeline::{BaselineFile, DsftOutcome, EvalOutcome, LoadedPolicy, Pipeline};
