//! Actuated bluff-body channel flow on a D2Q9 lattice.

mod baseline;
mod config;
mod env;
mod lattice;
mod probes;
mod snapshot;
pub mod validation;

pub use baseline::{
    crossing_frequency, make_baseline_snapshot, perturbed_inflow_field, phase_snapshots,
    BaselineStats, SHEDDING_THRESHOLD,
};
pub use config::LatticeConfig;
pub use env::{compute_drag_lift, Action, EnvState, FlowEnv, JetState, Observation, StepOutput};
pub use lattice::{
    equilibrium, FlowField, Lattice, XBoundary, YBoundary, CS2, CX, CY, MIRROR_Y, OPP, Q, RHO0, W,
};
pub use probes::{sample_pressure, Cell, ProbeLayout};
pub use snapshot::{read_snapshot, write_snapshot, FLOW_MAGIC};
